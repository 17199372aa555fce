"""Spiking networks trained with three-factor rules on simulated RRAM crossbars."""

from .crossbar import (
    CrossbarGeometry,
    CrossbarState,
    delay_estimate,
    effective_weights,
    map_weights,
    read_ideal,
    read_nonideal,
)
from .device import DeviceArray, DeviceCell, DeviceParams, VariationSpec, preset
from .errors import ConfigError, MrsnnError, NumericalError
from .metrics import MetricsLog, amari_index
from .neurons import LIFLayerState, LIFParams, lif_step
from .plasticity import FeedbackWeights, PulseProgram, RuleConfig, apply_program, delta_w_to_pulses

__version__ = "0.1.0"
