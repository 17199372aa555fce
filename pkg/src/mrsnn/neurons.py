"""Discrete-time leaky integrate-and-fire layers and spike traces.

One step of a layer::

    i_syn <- syn_decay * i_syn + input
    u     <- mem_decay * u + (1 - mem_decay) * u_rest + i_syn
    s      = u >= v_th          (deterministic)  or  Bernoulli(rho(u))
    u[s]  <- u_rest

``mem_decay = exp(-dt / tau_mem)`` and ``syn_decay = exp(-dt / tau_syn)``.
The resting potential enters scaled by ``1 - mem_decay`` so that it is the
fixed point of the leak. The input resistance of the continuous model is
folded into the weight units.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

BOXCAR = "boxcar"
SIGMOID = "sigmoid-derivative"


@dataclass(frozen=True)
class LIFParams:
    mem_decay: float = 0.9
    syn_decay: float = 0.8
    v_th: float = 1.0
    u_rest: float = 0.0
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("mem_decay", "syn_decay"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if not self.v_th > self.u_rest:
            raise ConfigError("v_th must exceed u_rest")

    @classmethod
    def from_time_constants(cls, tau_mem, tau_syn, dt, v_th=1.0, u_rest=0.0):
        return cls(math.exp(-dt / tau_mem), math.exp(-dt / tau_syn), v_th, u_rest, dt)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        if set(data) - names:
            raise ConfigError(f"unknown LIFParams fields: {sorted(set(data) - names)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class LIFLayerState:
    u: np.ndarray
    i_syn: np.ndarray
    s: np.ndarray

    @classmethod
    def zeros(cls, shape, params: LIFParams = None):
        u0 = params.u_rest if params is not None else 0.0
        return cls(np.full(shape, u0, dtype=float), np.zeros(shape), np.zeros(shape, dtype=bool))


def integrate(state: LIFLayerState, params: LIFParams, input_current):
    """Leak and integrate one step; returns ``(u_before_reset, i_syn)``."""
    i_syn = params.syn_decay * state.i_syn + input_current
    u = params.mem_decay * state.u + (1.0 - params.mem_decay) * params.u_rest + i_syn
    return u, i_syn


def fire(u, i_syn, spikes, params: LIFParams) -> LIFLayerState:
    """Reset the neurons in ``spikes`` and package the new state."""
    spikes = np.asarray(spikes, dtype=bool)
    return LIFLayerState(np.where(spikes, params.u_rest, u), i_syn, spikes)


def lif_step(state: LIFLayerState, params: LIFParams, input_current):
    """Deterministic step; returns ``(new_state, spikes)``."""
    u, i_syn = integrate(state, params, input_current)
    spikes = u >= params.v_th
    return fire(u, i_syn, spikes, params), spikes


def stochastic_spike_step(state: LIFLayerState, params: LIFParams, input_current, rho, rng=None):
    """Step where each neuron spikes with probability ``rho(u)``.

    ``rho`` maps membrane potentials to probabilities in [0, 1]. A hard
    threshold for ``rho`` reproduces :func:`lif_step` exactly.
    """
    rng = np.random.default_rng(rng)
    u, i_syn = integrate(state, params, input_current)
    p = np.asarray(rho(u), dtype=float)
    spikes = rng.random(np.shape(u)) < p
    return fire(u, i_syn, spikes, params), spikes


def perceptron_forward(w, s_in, v_th: float = 1.0):
    """Binary perceptron layer: ``Theta(w @ s_in - v_th)``."""
    return np.asarray(w, dtype=float) @ np.asarray(s_in, dtype=float) >= v_th


def sigmoid_rate(u, center: float = 1.0, width: float = 1.0):
    """Logistic firing probability whose derivative is the sigmoid surrogate."""
    return 0.5 * (1.0 + np.tanh(0.5 * (np.asarray(u, dtype=float) - center) / width))


def surrogate_slope(u, kind: str = BOXCAR, width: float = 1.0, center: float = 1.0):
    """Pseudo-derivative of the spike nonlinearity at membrane potential ``u``.

    ``boxcar`` is 1 inside ``|u - center| <= width / 2``. The sigmoid kind is
    the derivative of :func:`sigmoid_rate` and integrates to 1 over ``u``.
    """
    if width <= 0:
        raise ValueError("surrogate width must be positive")
    u = np.asarray(u, dtype=float)
    if kind == BOXCAR:
        return (np.abs(u - center) <= 0.5 * width).astype(float)
    if kind == SIGMOID:
        r = sigmoid_rate(u, center, width)
        return r * (1.0 - r) / width
    raise ValueError(f"unknown surrogate kind {kind!r}")


@dataclass(frozen=True, eq=False)
class TraceState:
    value: np.ndarray
    decay: float

    def __post_init__(self):
        if not 0 <= self.decay < 1:
            raise ConfigError("trace decay must lie in [0, 1)")

    @classmethod
    def zeros(cls, shape, decay):
        return cls(np.zeros(shape), decay)


def update_trace(trace: TraceState, spikes) -> TraceState:
    """Exponential filter of a spike train: ``value <- decay * value + spikes``."""
    return TraceState(trace.decay * trace.value + np.asarray(spikes, dtype=float), trace.decay)


def blankout_transmit(spikes, p: float, rng=None):
    """Pass each spike independently with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("transmission probability must lie in [0, 1]")
    spikes = np.asarray(spikes, dtype=bool)
    rng = np.random.default_rng(rng)
    return spikes & (rng.random(spikes.shape) < p)


def write_spike_csv(path, raster) -> None:
    """Write a ``(steps, neurons)`` boolean raster as ``t_step,neuron_id`` events."""
    raster = np.asarray(raster, dtype=bool)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_step", "neuron_id"])
        for t, k in zip(*np.nonzero(raster)):
            writer.writerow([int(t), int(k)])


def read_spike_csv(path, shape=None):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        events = [(int(row["t_step"]), int(row["neuron_id"])) for row in reader]
    if shape is None:
        steps = 1 + max((t for t, _ in events), default=-1)
        neurons = 1 + max((k for _, k in events), default=-1)
        shape = (steps, neurons)
    raster = np.zeros(shape, dtype=bool)
    for t, k in events:
        raster[t, k] = True
    return raster
