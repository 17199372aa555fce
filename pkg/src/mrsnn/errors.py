"""Exception and warning types shared across the package."""


class MrsnnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MrsnnError, ValueError):
    """Invalid experiment configuration or parameter set."""


class InvalidParams(ConfigError):
    pass


class NumericalError(MrsnnError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class HeadroomExceeded(NumericalError):
    """Requested conductance change cannot be programmed from the current state."""


class DivisionDegenerate(NumericalError):
    pass


class ResampleLimit(NumericalError):
    pass


class TargetOutOfRange(MrsnnError, ValueError):
    pass


class NotConverged(NumericalError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class DimensionMismatch(MrsnnError, ValueError):
    pass


class SingularSystem(NumericalError):
    pass


class SolverNotConverged(NumericalError):
    pass


class DegenerateMatrix(NumericalError):
    pass


class DatasetError(MrsnnError, ValueError):
    pass


class BadMagic(DatasetError):
    pass


class TruncatedFile(DatasetError):
    pass


class CountMismatch(DatasetError):
    pass


class OutOfFittedRange(UserWarning):
    """Interpolation evaluated outside the voltage range the fit was made on."""
