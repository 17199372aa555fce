"""Three-factor plasticity rules and the bridge to device programming pulses.

Weight-change matrices follow the ``(post, pre)`` layout of the crossbar
weight convention. Rules that act per time step also accept a leading
batch axis on their vector inputs; the returned update is then summed over
the batch in a fixed order.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .crossbar import REFERENCE, CrossbarState
from .device import exact_pulse_count, linearized_pulse_count
from .errors import ConfigError, DimensionMismatch
from .neurons import BOXCAR, surrogate_slope

RULES = ("stdp", "erbp", "superspike", "decolle", "eghr", "ecd")
DATA, RECONSTRUCTION = "data", "reconstruction"


@dataclass(frozen=True)
class RuleConfig:
    """Rule selection plus every rule's knobs; unused fields are ignored.

    ``surrogate_center`` defaults to the firing threshold of the layer the
    rule is applied to. ``e0=None`` means ``2 * output dimension`` for EGHR.
    """

    rule: str = "erbp"
    learning_rate: float = 0.01
    a_plus: float = 1.0
    a_minus: float = 1.0
    pre_decay: float = 0.8
    post_decay: float = 0.8
    surrogate: str = BOXCAR
    surrogate_width: float = 1.0
    surrogate_center: float = 1.0
    outer_decay: float = 0.0
    e0: Optional[float] = None
    readout_seed: int = 0

    def __post_init__(self):
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}; choose from {RULES}")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be nonnegative")
        for name in ("pre_decay", "post_decay", "outer_decay"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1)")

    def slope(self, u):
        return surrogate_slope(u, self.surrogate, self.surrogate_width, self.surrogate_center)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        if set(data) - names:
            raise ConfigError(f"unknown RuleConfig fields: {sorted(set(data) - names)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class FeedbackWeights:
    """Fixed random projection ``g[i, k]`` from error ``k`` to neuron ``i``."""

    g: np.ndarray
    seed: Optional[int] = None
    distribution: str = "uniform(-1, 1) / sqrt(n_outputs)"

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @classmethod
    def random(cls, n_neurons: int, n_outputs: int, seed: int) -> "FeedbackWeights":
        rng = np.random.default_rng(seed)
        g = rng.uniform(-1.0, 1.0, (n_neurons, n_outputs)) / np.sqrt(n_outputs)
        return cls(g, seed)

    @classmethod
    def identity(cls, n: int) -> "FeedbackWeights":
        return cls(np.eye(n), None, "identity")

    def modulation(self, error):
        """``M_i = sum_k g_ik error_k`` (batched over leading axes)."""
        return np.asarray(error, dtype=float) @ self.g.T


def _outer_sum(post, pre):
    """Outer product, summed over a leading batch axis when present."""
    post = np.asarray(post, dtype=float)
    pre = np.asarray(pre, dtype=float)
    if post.ndim != pre.ndim:
        raise DimensionMismatch("pre and post factors need the same batch layout")
    if post.ndim == 1:
        return np.outer(post, pre)
    if post.shape[0] != pre.shape[0]:
        raise DimensionMismatch("batch sizes differ")
    return post.T @ pre


def stdp_update(pre_trace, post_trace, pre_spikes, post_spikes, cfg: RuleConfig):
    """Pair-based STDP from exponential traces.

    ``a_plus * S_post * trace_pre - a_minus * trace_post * S_pre``. Traces are
    expected to include the current step's spikes.
    """
    ltp = _outer_sum(post_spikes, pre_trace)
    ltd = _outer_sum(post_trace, pre_spikes)
    return cfg.a_plus * ltp - cfg.a_minus * ltd


def three_factor_update(f_pre, f_post, m, eta: float):
    """Generic ``eta * m_i * f_post_i * f_pre_j``."""
    f_post = np.asarray(f_post, dtype=float)
    m = np.asarray(m, dtype=float)
    if f_post.shape != m.shape:
        raise DimensionMismatch(f"modulator shape {m.shape} != post shape {f_post.shape}")
    return eta * _outer_sum(m * f_post, f_pre)


def erbp_update(pre_spikes, u_post, error, fb: FeedbackWeights, cfg: RuleConfig):
    """Event-driven random backprop: ``eta * (g @ error)_i * boxcar(u_i) * S_j``."""
    gate = surrogate_slope(u_post, BOXCAR, cfg.surrogate_width, cfg.surrogate_center)
    return cfg.learning_rate * _outer_sum(fb.modulation(error) * gate, pre_spikes)


def superspike_update(pre_trace, u_post, error, cfg: RuleConfig, outer=None):
    """SuperSpike with its outer kernel realised as a per-synapse trace.

    Returns ``(dw, outer)``; feed ``outer`` back in on the next step. With
    ``outer_decay = 0`` this is the instantaneous product
    ``eta * error_i * rho'(u_i) * trace_j``.
    """
    inner = _outer_sum(np.asarray(error, dtype=float) * cfg.slope(u_post), pre_trace)
    outer = inner if outer is None else cfg.outer_decay * outer + inner
    return cfg.learning_rate * outer, outer


def decolle_update(pre_trace, u_post, spikes_post, targets, fb: FeedbackWeights, cfg: RuleConfig):
    """Layer-local learning through a fixed random readout.

    The local error is ``target_k - sum_i g_ik s_i``. Returns
    ``(dw, error)``. Nothing here depends on other layers' weights.
    """
    readout = np.asarray(spikes_post, dtype=float) @ fb.g
    error = np.asarray(targets, dtype=float) - readout
    dw = cfg.learning_rate * _outer_sum(fb.modulation(error) * cfg.slope(u_post), pre_trace)
    return dw, error


def laplace_energy(u):
    """``E(u) = sum_k |u_k|`` over the last axis."""
    return np.sum(np.abs(u), axis=-1)


def eghr_update(x, u, cfg: RuleConfig):
    """Error-gated Hebbian rule with a Laplacian prior.

    ``eta * (E0 - sum|u|) * sign(u) x^T``. The stationary point is a scaled
    inverse of the mixing matrix; ``E0`` sets the scale.
    """
    u = np.asarray(u, dtype=float)
    e0 = cfg.e0 if cfg.e0 is not None else 2.0 * u.shape[-1]
    gate = e0 - laplace_energy(u)
    return cfg.learning_rate * _outer_sum(gate[..., None] * np.sign(u), x)


def calibrate_e0(u_samples) -> float:
    """E0 for which outputs at their current scale are an EGHR fixed point.

    Solves ``E[(E0 - E(u)) |u_i|] = 0`` per output and averages over outputs.
    """
    u = np.atleast_2d(np.asarray(u_samples, dtype=float))
    a = np.abs(u)
    energy = laplace_energy(u)[:, None]
    return float(np.mean(np.mean(energy * a, axis=0) / np.mean(a, axis=0)))


def ecd_modulate(stdp_dw, phase: str):
    if phase == DATA:
        return np.asarray(stdp_dw, dtype=float)
    if phase == RECONSTRUCTION:
        return -np.asarray(stdp_dw, dtype=float)
    raise ValueError(f"phase must be {DATA!r} or {RECONSTRUCTION!r}")


# -- device bridge -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PulseProgram:
    """Signed real pulse counts for both devices of every synapse.

    ``clipped`` marks synapses whose requested change exceeded the combined
    headroom of the pair and was cut short.
    """

    pos: np.ndarray
    neg: np.ndarray
    clipped: np.ndarray = None

    def __post_init__(self):
        if self.clipped is None:
            object.__setattr__(self, "clipped", np.zeros(np.shape(self.pos), dtype=bool))
        if not (np.all(np.isfinite(self.pos)) and np.all(np.isfinite(self.neg))):
            raise ValueError("pulse counts must be finite")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "col", "device", "pulses"])
            for (i, j), n in np.ndenumerate(self.pos):
                writer.writerow([i, j, "+", repr(float(n))])
                writer.writerow([i, j, "-", repr(float(self.neg[i, j]))])


def delta_w_to_pulses(dw, state: CrossbarState, eta_prime: float, mode: str = "exact",
                      max_fraction: float = 0.999, model=None) -> PulseProgram:
    """Translate weight changes into per-device pulse counts.

    The conductance change ``eta_prime * dw`` goes to ``G+`` first. Whatever
    does not fit within ``max_fraction`` of its headroom is routed to ``G-``
    with the opposite sign; anything beyond that is clipped and flagged.

    ``model`` is the device model the programming controller believes in.
    By default it is each device's own parameters; passing the nominal
    parameters leaves device-to-device variation uncompensated.
    """
    if mode == "exact":
        count = exact_pulse_count
    elif mode == "linearized":
        count = linearized_pulse_count
    else:
        raise ValueError(f"mode must be 'exact' or 'linearized', got {mode!r}")
    dg = eta_prime * np.asarray(dw, dtype=float)
    if dg.shape != state.shape:
        raise DimensionMismatch(f"update shape {dg.shape} != crossbar shape {state.shape}")
    pp, pn = state.pos.params, state.neg.params
    gp, gn = state.g_pos, state.g_neg
    usable = np.where(state.pos.exhausted, 0.0, 1.0)

    room_p = np.where(dg > 0, pp.g_max - gp, gp - pp.g_min) * max_fraction * usable
    on_pos = np.sign(dg) * np.minimum(np.abs(dg), room_p)
    rest = dg - on_pos
    if state.scheme == REFERENCE:
        room_n = np.zeros_like(rest)
    else:
        # raising the weight by `rest` means lowering G-
        room_n = np.where(rest > 0, gn - pn.g_min, pn.g_max - gn) * max_fraction
        room_n = room_n * np.where(state.neg.exhausted, 0.0, 1.0)
    on_neg = np.sign(rest) * np.minimum(np.abs(rest), room_n)
    clipped = np.abs(rest - on_neg) > 1e-12 * np.maximum(np.abs(dg), 1.0)

    if model is None:
        n_pos = count(pp, gp, on_pos)
        n_neg = count(pn, gn, -on_neg)
    else:
        n_pos = _model_count(count, model, gp, on_pos, max_fraction)
        n_neg = _model_count(count, model, gn, -on_neg, max_fraction)
    return PulseProgram(np.asarray(n_pos, dtype=float), np.asarray(n_neg, dtype=float), clipped)


def _model_count(count, model, g, dg, max_fraction):
    # the real device may sit outside the model's range; keep the request
    # inside what the model considers reachable
    span = model.g_max - model.g_min
    g = np.clip(g, model.g_min + 1e-6 * span, model.g_max - 1e-6 * span)
    room = np.where(dg > 0, model.g_max - g, g - model.g_min) * max_fraction
    return count(model, g, np.sign(dg) * np.minimum(np.abs(dg), room))


def apply_program(state: CrossbarState, program: PulseProgram, rounding: str = "nearest",
                  rng=None, write_noise: float = 0.0) -> CrossbarState:
    """Apply a pulse program to both arrays (positive array first)."""
    rng = np.random.default_rng(rng)
    pos = state.pos.apply(program.pos, rounding, rng, write_noise)
    neg = state.neg
    if state.scheme != REFERENCE:
        neg = state.neg.apply(program.neg, rounding, rng, write_noise)
    return state.with_arrays(pos, neg)
