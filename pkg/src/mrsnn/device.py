"""Asymmetric nonlinear RRAM conductance-update model.

Potentiation and depression follow exponential saturation curves in the
number of applied programming pulses ``n``::

    G_LTP(n) = g_max - beta_p * exp(-alpha_p * n)
    G_LTD(n) = g_min + beta_d * exp(-alpha_d * n)

Conductances are in nanosiemens, rates are per pulse. Every function here
is vectorised: the fields of :class:`DeviceParams` may be numpy arrays
(one entry per physical device) as long as they broadcast against the
conductances they are used with.

Signed pulse counts use one convention throughout: positive counts are
potentiation (LTP) pulses, negative counts are depression (LTD) pulses.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DivisionDegenerate,
    HeadroomExceeded,
    InvalidParams,
    NotConverged,
    OutOfFittedRange,
    ResampleLimit,
    TargetOutOfRange,
)

LTP = "ltp"
LTD = "ltd"
ROUNDING_MODES = ("nearest", "floor", "stochastic", "none")

_PARAM_FIELDS = ("g_max", "g_min", "alpha_p", "alpha_d", "beta_p", "beta_d", "v_p")


def _check_polarity(polarity):
    if polarity not in (LTP, LTD):
        raise ValueError(f"polarity must be {LTP!r} or {LTD!r}, got {polarity!r}")


@dataclass(frozen=True, eq=False)
class DeviceParams:
    """Fitted update-curve parameters of one device (or an array of devices).

    ``beta_p``/``beta_d`` may exceed ``g_max - g_min``; curve values outside
    the conductance window are clamped wherever a physical conductance is
    produced.
    """

    g_max: float
    g_min: float
    alpha_p: float
    alpha_d: float
    beta_p: float
    beta_d: float
    v_p: float = 3.0

    def __post_init__(self):
        g_max, g_min = np.asarray(self.g_max), np.asarray(self.g_min)
        if not np.all(g_min > 0) or not np.all(g_max > g_min):
            raise InvalidParams("need g_max > g_min > 0")
        for name in ("alpha_p", "alpha_d", "beta_p", "beta_d"):
            if not np.all(np.asarray(getattr(self, name)) > 0):
                raise InvalidParams(f"{name} must be positive")

    @property
    def delta_g(self):
        return self.g_max - self.g_min

    @property
    def g_ref(self):
        """Mid-window reference conductance ``(g_max + g_min) / 2``."""
        return 0.5 * (self.g_max + self.g_min)

    def replace(self, **changes) -> "DeviceParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {name: _jsonable(getattr(self, name)) for name in _PARAM_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceParams":
        unknown = set(data) - set(_PARAM_FIELDS)
        if unknown:
            raise InvalidParams(f"unknown DeviceParams fields: {sorted(unknown)}")
        try:
            return cls(**{k: _from_json(v) for k, v in data.items()})
        except TypeError as exc:
            raise InvalidParams(str(exc)) from None

    def __eq__(self, other):
        if not isinstance(other, DeviceParams):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in _PARAM_FIELDS
        )

    __hash__ = None


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def _from_json(value):
    return np.asarray(value, dtype=float) if isinstance(value, list) else value


@dataclass(frozen=True)
class VariationSpec:
    """Device-to-device variation as Gaussian tolerances (std / mean).

    Variation of ``beta`` is folded into ``alpha``: both enter the update as
    ``exp(z - alpha * n)`` with Gaussian ``z`` and ``alpha``, so a single
    Gaussian spread on ``alpha`` covers the pair.
    """

    alpha_tolerance: float = 0.0
    gmax_tolerance: float = 0.0
    gmin_tolerance: float = 0.0
    write_verify: bool = False
    verify_tolerance: float = 1.0

    def __post_init__(self):
        for name in ("alpha_tolerance", "gmax_tolerance", "gmin_tolerance"):
            tol = getattr(self, name)
            if not 0 <= tol < 1:
                raise InvalidParams(f"{name} must lie in [0, 1), got {tol}")
        if self.verify_tolerance <= 0:
            raise InvalidParams("verify_tolerance must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "VariationSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidParams(f"unknown VariationSpec fields: {sorted(unknown)}")
        return cls(**data)


#: Variation reported for the +/-3 V Mo/TiOx/TiN device.
DEFAULT_VARIATION = VariationSpec(alpha_tolerance=0.25, gmax_tolerance=0.01, gmin_tolerance=0.05)


@dataclass(frozen=True)
class AsymmetryFactors:
    panl: float
    danl: float
    anl: float


# -- update curves -----------------------------------------------------------


def conductance_after_pulses(params: DeviceParams, polarity: str, n):
    """Conductance reached after ``n`` pulses from the start of a curve."""
    _check_polarity(polarity)
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("pulse count must be nonnegative")
    if polarity == LTP:
        raw = params.g_max - params.beta_p * np.exp(-params.alpha_p * n)
    else:
        raw = params.g_min + params.beta_d * np.exp(-params.alpha_d * n)
    return _scalar(np.clip(raw, params.g_min, params.g_max))


def conductance_slope(params: DeviceParams, polarity: str, n):
    """dG/dn of the unclamped curve, in nS per pulse."""
    _check_polarity(polarity)
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("pulse count must be nonnegative")
    if polarity == LTP:
        slope = params.beta_p * params.alpha_p * np.exp(-params.alpha_p * n)
    else:
        slope = -params.beta_d * params.alpha_d * np.exp(-params.alpha_d * n)
    return _scalar(slope)


def asymmetry_factors(params: DeviceParams, total_pulses: float) -> AsymmetryFactors:
    """PANL, DANL and ANL at half of a ``total_pulses`` budget.

    Computed on the unclamped curves normalised as ``(G - g_min) / dG``, so
    ``anl == panl + danl`` holds algebraically.
    """
    if total_pulses <= 0:
        raise ValueError("total_pulses must be positive")
    half = 0.5 * total_pulses
    dg = params.delta_g
    decay_p = params.beta_p * np.exp(-params.alpha_p * half)
    decay_d = params.beta_d * np.exp(-params.alpha_d * half)
    # (G_LTP(N/2) - g_min) / dG - 0.5 with G_LTP = g_max - decay_p
    panl = 0.5 - decay_p / dg
    danl = 0.5 - decay_d / dg
    anl = 1.0 - (decay_p + decay_d) / dg
    return AsymmetryFactors(float(panl), float(danl), float(anl))


def advance(params: DeviceParams, g, n):
    """Move conductance ``g`` along its curve by signed pulse count ``n``.

    The position on the curve is implied by ``g`` itself, so potentiation
    and depression can interleave freely::

        LTP: g' = g_max - (g_max - g) * exp(-alpha_p * n)
        LTD: g' = g_min + (g - g_min) * exp(-alpha_d * |n|)
    """
    g = np.asarray(g, dtype=float)
    n = np.asarray(n, dtype=float)
    up = params.g_max - (params.g_max - g) * np.exp(-params.alpha_p * np.maximum(n, 0.0))
    down = params.g_min + (g - params.g_min) * np.exp(params.alpha_d * np.minimum(n, 0.0))
    out = np.where(n > 0, up, np.where(n < 0, down, g))
    return _scalar(np.clip(out, params.g_min, params.g_max))


def exact_pulse_count(params: DeviceParams, g, delta_g):
    """Signed real pulse count that changes ``g`` by exactly ``delta_g``."""
    g = np.asarray(g, dtype=float)
    delta_g = np.asarray(delta_g, dtype=float)
    up_room = params.g_max - g
    down_room = g - params.g_min
    pos, neg = delta_g > 0, delta_g < 0
    if np.any(pos & (delta_g >= up_room)) or np.any(neg & (-delta_g >= down_room)):
        raise HeadroomExceeded("requested change reaches or passes the conductance bound")
    x_up = np.where(pos, delta_g, 0.0) / np.where(pos, up_room, 1.0)
    x_down = np.where(neg, -delta_g, 0.0) / np.where(neg, down_room, 1.0)
    n = -np.log1p(-x_up) / params.alpha_p + np.log1p(-x_down) / params.alpha_d
    return _scalar(np.where(pos | neg, n, 0.0))


def linearized_pulse_count(params: DeviceParams, g, delta_g):
    """First-order version of :func:`exact_pulse_count` for small changes."""
    g = np.asarray(g, dtype=float)
    delta_g = np.asarray(delta_g, dtype=float)
    up_room = params.g_max - g
    down_room = g - params.g_min
    pos, neg = delta_g > 0, delta_g < 0
    if np.any(pos & (up_room == 0)) or np.any(neg & (down_room == 0)):
        raise DivisionDegenerate("zero headroom in the update direction")
    up = np.where(pos, delta_g, 0.0) / np.where(pos, up_room, 1.0) / params.alpha_p
    down = np.where(neg, delta_g, 0.0) / np.where(neg, down_room, 1.0) / params.alpha_d
    return _scalar(up + down)


def round_pulses(n, rounding: str = "nearest", rng=None):
    """Round nonnegative real pulse counts to integers (``"none"`` keeps them real)."""
    n = np.asarray(n, dtype=float)
    if rounding == "nearest":
        return np.floor(n + 0.5)
    if rounding == "floor":
        return np.floor(n)
    if rounding == "stochastic":
        rng = np.random.default_rng(rng)
        base = np.floor(n)
        return base + (rng.random(n.shape) < (n - base))
    if rounding == "none":
        return n
    raise ValueError(f"rounding must be one of {ROUNDING_MODES}, got {rounding!r}")


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


# -- single devices ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeviceCell:
    """Live state of one device. Operations return new cells."""

    conductance: float
    params: DeviceParams
    write_count: int = 0
    endurance_limit: Optional[int] = None
    exhausted: bool = False

    def __post_init__(self):
        p = self.params
        if not p.g_min <= self.conductance <= p.g_max:
            raise InvalidParams(
                f"conductance {self.conductance} outside [{p.g_min}, {p.g_max}]"
            )
        if self.endurance_limit is not None and self.endurance_limit <= 0:
            raise InvalidParams("endurance_limit must be positive")


def pulses_for_delta_exact(cell: DeviceCell, delta_g: float) -> float:
    return exact_pulse_count(cell.params, cell.conductance, delta_g)


def pulses_for_delta_linearized(cell: DeviceCell, delta_g: float) -> float:
    return linearized_pulse_count(cell.params, cell.conductance, delta_g)


def apply_pulses(
    cell: DeviceCell,
    polarity: str,
    n: float,
    rounding: str = "nearest",
    rng=None,
    write_noise: float = 0.0,
) -> DeviceCell:
    """Apply ``n`` pulses of one polarity and return the updated cell.

    ``n`` is rounded to whole pulses first. ``write_noise`` is the relative
    std of a multiplicative Gaussian error on the effective pulse count.
    Once ``write_count`` passes ``endurance_limit`` the cell is flagged
    exhausted and ignores further pulses.
    """
    _check_polarity(polarity)
    if n < 0:
        raise ValueError("pulse count must be nonnegative")
    if cell.exhausted:
        return cell
    rng = np.random.default_rng(rng)
    count = float(round_pulses(n, rounding, rng))
    if count == 0:
        return cell
    effective = count
    if write_noise > 0:
        effective = max(0.0, count * (1.0 + write_noise * rng.standard_normal()))
    signed = effective if polarity == LTP else -effective
    g = advance(cell.params, cell.conductance, signed)
    writes = cell.write_count + int(math.ceil(count))
    exhausted = cell.endurance_limit is not None and writes > cell.endurance_limit
    return dataclasses.replace(cell, conductance=g, write_count=writes, exhausted=exhausted)


def write_verify(
    cell: DeviceCell,
    target: float,
    tolerance: float,
    max_iters: int = 20,
    rng=None,
    write_noise: float = 0.0,
    rounding: str = "nearest",
):
    """Program-and-read loop until ``|G - target| <= tolerance``.

    Returns ``(cell, iterations)``. Raises :class:`NotConverged` when the
    budget runs out, including the case where the residual is smaller than
    one pulse step so rounding leaves nothing to apply.
    """
    p = cell.params
    if not p.g_min <= target <= p.g_max:
        raise TargetOutOfRange(f"target {target} outside [{p.g_min}, {p.g_max}]")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    rng = np.random.default_rng(rng)
    for iteration in range(max_iters + 1):
        residual = target - cell.conductance
        if abs(residual) <= tolerance:
            return cell, iteration
        if iteration == max_iters or cell.exhausted:
            break
        # stop just short of a bound: the exact count diverges there
        room = p.g_max - cell.conductance if residual > 0 else cell.conductance - p.g_min
        step = math.copysign(min(abs(residual), 0.999999 * room), residual)
        n = pulses_for_delta_exact(cell, step)
        polarity = LTP if n > 0 else LTD
        cell = apply_pulses(cell, polarity, abs(n), rounding, rng, write_noise)
    raise NotConverged(
        f"|G - target| = {abs(target - cell.conductance):.4g} nS after {max_iters} iterations",
        iterations=max_iters,
    )


# -- arrays of devices -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeviceArray:
    """Conductances, parameters and wear counters for a grid of devices."""

    conductance: np.ndarray
    params: DeviceParams
    write_count: np.ndarray = None
    endurance_limit: Optional[int] = None
    exhausted: np.ndarray = None

    def __post_init__(self):
        g = np.asarray(self.conductance, dtype=float)
        object.__setattr__(self, "conductance", g)
        if self.write_count is None:
            object.__setattr__(self, "write_count", np.zeros(g.shape, dtype=np.int64))
        if self.exhausted is None:
            object.__setattr__(self, "exhausted", np.zeros(g.shape, dtype=bool))

    @property
    def shape(self):
        return self.conductance.shape

    def apply(self, n, rounding="nearest", rng=None, write_noise=0.0) -> "DeviceArray":
        """Apply a signed pulse-count array (positive = LTP) elementwise."""
        n = np.broadcast_to(np.asarray(n, dtype=float), self.shape)
        n = np.where(self.exhausted, 0.0, n)
        rng = np.random.default_rng(rng)
        count = round_pulses(np.abs(n), rounding, rng)
        effective = count
        if write_noise > 0:
            noise = rng.standard_normal(self.shape)
            effective = np.maximum(count * (1.0 + write_noise * noise), 0.0)
        g = advance(self.params, self.conductance, np.sign(n) * effective)
        writes = self.write_count + np.ceil(count).astype(np.int64)
        exhausted = self.exhausted
        if self.endurance_limit is not None:
            exhausted = exhausted | (writes > self.endurance_limit)
        return dataclasses.replace(self, conductance=np.asarray(g), write_count=writes,
                                   exhausted=exhausted)

    def cell(self, index) -> DeviceCell:
        params = DeviceParams(**{
            f: float(np.broadcast_to(getattr(self.params, f), self.shape)[index])
            for f in _PARAM_FIELDS
        })
        return DeviceCell(float(self.conductance[index]), params, int(self.write_count[index]),
                          self.endurance_limit, bool(self.exhausted[index]))


# -- variation ---------------------------------------------------------------


def sample_param_array(nominal: DeviceParams, spec: VariationSpec, shape, rng=None,
                       max_draws: int = 1000) -> DeviceParams:
    """Per-device parameters drawn around ``nominal`` with array fields of ``shape``."""
    rng = np.random.default_rng(rng)
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    spreads = {
        "alpha_p": spec.alpha_tolerance,
        "alpha_d": spec.alpha_tolerance,
        "g_max": spec.gmax_tolerance,
        "g_min": spec.gmin_tolerance,
    }
    values = {f: np.full(shape, float(getattr(nominal, f))) for f in _PARAM_FIELDS}
    todo = np.ones(shape, dtype=bool)
    for _ in range(max_draws):
        k = int(todo.sum())
        for name, tol in spreads.items():
            if tol > 0:
                mean = float(getattr(nominal, name))
                values[name][todo] = mean + tol * abs(mean) * rng.standard_normal(k)
        ok = (
            (values["g_min"] > 0)
            & (values["g_max"] > values["g_min"])
            & (values["alpha_p"] > 0)
            & (values["alpha_d"] > 0)
        )
        todo = ~ok
        if not todo.any():
            break
    else:
        raise ResampleLimit(f"{int(todo.sum())} devices still invalid after {max_draws} draws")
    if shape == ():
        return DeviceParams(**{f: float(v) for f, v in values.items()})
    return DeviceParams(**values)


def sample_params(nominal: DeviceParams, spec: VariationSpec, rng=None) -> DeviceParams:
    return sample_param_array(nominal, spec, (), rng)


# -- fitted Mo/TiOx/TiN data -------------------------------------------------

# V_p -> (g_max nS, alpha_p per pulse, beta_p nS, rmse)
POTENTIATION_TABLE = {
    3.0: (674.0, 30.58e-3, 626.8, 9.07),
    2.5: (252.7, 18.23e-3, 220.22, 0.6416),
    2.0: (83.38, 19.19e-3, 71.7, 0.2276),
}
# V_p -> (g_min nS, alpha_d per pulse, beta_d nS, rmse)
DEPRESSION_TABLE = {
    -3.0: (32.95, 353.4e-3, 921.9, 23.696),
    -2.5: (186.3, 35.29e-3, 410.9, 10.3215),
    -2.0: (340.5, 20.55e-3, 330.8, 6.12),
}

FITTED_RANGE = (2.0, 3.0)


def interpolate_params(v_p: float, polarity: str) -> dict:
    """Evaluate the voltage-interpolation formulas fitted across the table rows.

    Potentiation returns ``g_max, alpha_p, beta_p``; depression returns
    ``g_min, alpha_d, beta_d``. Depression formulas take the (negative)
    depression voltage; a positive magnitude is accepted and negated.
    """
    _check_polarity(polarity)
    mag = abs(v_p)
    if not FITTED_RANGE[0] <= mag <= FITTED_RANGE[1]:
        warnings.warn(f"|V_p| = {mag} V outside fitted range {FITTED_RANGE}",
                      OutOfFittedRange, stacklevel=2)
    if polarity == LTP:
        v = mag
        return {
            "g_max": 2.968 * math.exp(1.823 * v) - 30.4,
            "alpha_p": (2.019e-9 * math.exp(7.51 * v) + 18.28) * 1e-3,
            "beta_p": 1.522 * math.exp(2.014 * v) - 13.78,
        }
    v = -mag
    return {
        "g_min": 307.6 * v + 955.5,
        "alpha_d": (8.14e-6 * math.exp(-5.48 * v) + 20.5) * 1e-3,
        "beta_d": 0.009 * math.exp(-3.706 * v) + 315.9,
    }


PRESET_VOLTAGES = {
    "mo-tiox-tin-3v": 3.0,
    "mo-tiox-tin-2v5": 2.5,
    "mo-tiox-tin-2v": 2.0,
}


def preset_rows(name: str) -> dict:
    """Raw table rows behind a preset, valid or not as a combined device."""
    try:
        v = PRESET_VOLTAGES[name]
    except KeyError:
        raise InvalidParams(f"unknown preset {name!r}; choose from {sorted(PRESET_VOLTAGES)}") from None
    g_max, alpha_p, beta_p, _ = POTENTIATION_TABLE[v]
    g_min, alpha_d, beta_d, _ = DEPRESSION_TABLE[-v]
    return dict(g_max=g_max, g_min=g_min, alpha_p=alpha_p, alpha_d=alpha_d,
                beta_p=beta_p, beta_d=beta_d, v_p=v)


def preset(name: str) -> DeviceParams:
    """Nominal device for a named preset.

    The 2 V rows fit potentiation and depression separately and give
    ``g_min > g_max``; building that preset raises :class:`InvalidParams`.
    Its rows stay available through :func:`preset_rows`.
    """
    rows = preset_rows(name)
    try:
        return DeviceParams(**rows)
    except InvalidParams as exc:
        raise InvalidParams(
            f"preset {name!r} is not a consistent device (g_min={rows['g_min']} nS, "
            f"g_max={rows['g_max']} nS): {exc}"
        ) from None


def list_presets() -> list[tuple[str, dict, bool]]:
    out = []
    for name in PRESET_VOLTAGES:
        rows = preset_rows(name)
        out.append((name, rows, rows["g_max"] > rows["g_min"]))
    return out
