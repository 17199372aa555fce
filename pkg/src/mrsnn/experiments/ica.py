"""Online ICA of two rotated Laplacian sources with EGHR on a device crossbar."""

from __future__ import annotations

import math

import numpy as np

from ..crossbar import CrossbarGeometry, map_weights, read_ideal, read_nonideal
from ..device import sample_param_array
from ..errors import ConfigError
from ..metrics import MetricsLog, amari_index
from ..plasticity import RuleConfig, apply_program, delta_w_to_pulses, eghr_update
from .base import RunResult, seed_streams

DEFAULTS = {
    "n_samples": 10_000,
    "log_every": 100,
    "theta": math.pi / 6,
    "n_sources": 2,
    "source_scale": 0.12,
    "w_max": 20.0,
    "w_init": 10.0,
    "learning_rate": 0.05,
    "e0": None,
    "rounding": "none",
    "bridge_mode": "exact",
    "bridge_model": "device",
    "write_noise": 0.0,
    "r_wire": 0.0,
    "optimizer": "sgd",
}


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def run_ica(cfg) -> RunResult:
    """Train a 2x2 demixing crossbar online and log the Amari index.

    In ideal mode the devices are nominal, pulse counts stay real-valued and
    wires are ideal, so every write realises the requested change exactly.
    Otherwise each device gets its own sampled parameters and pulses are
    rounded. The controller computes pulse counts from the nominal model
    (``bridge_model="nominal"``) unless told it knows every device
    (``"device"``).

    Sources are Laplacian read voltages with scale ``source_scale`` volts.
    With E0 fixed, the per-sample relative weight step grows as
    ``learning_rate * source_scale**2``, so the amplitude sets the noise floor.
    """
    task = cfg.task_params(DEFAULTS)
    if task["optimizer"] != "sgd":
        raise ConfigError("only the fixed-rate 'sgd' optimizer is implemented for ICA")
    if task["n_sources"] != 2:
        raise ConfigError("the rotation mixing task is two-dimensional")
    if task["bridge_model"] not in ("nominal", "device"):
        raise ConfigError("bridge_model must be 'nominal' or 'device'")
    rule = cfg.rule or RuleConfig("eghr", learning_rate=task["learning_rate"], e0=task["e0"])
    if rule.rule != "eghr":
        raise ConfigError("ICA needs the 'eghr' rule")

    src_rng, dev_rng, write_rng = seed_streams(cfg.seed, 3)
    nominal = cfg.device_params()
    mixing = rotation(task["theta"])
    w_max = task["w_max"]
    shape = (2, 2)

    if cfg.ideal:
        pos_params = neg_params = nominal
        rounding, noise, r_wire = "none", 0.0, 0.0
    else:
        pos_params = sample_param_array(nominal, cfg.variation, shape, dev_rng)
        neg_params = sample_param_array(nominal, cfg.variation, shape, dev_rng)
        rounding, noise, r_wire = task["rounding"], task["write_noise"], task["r_wire"]
    geometry = CrossbarGeometry(2, 2, r_wire)

    state = map_weights(task["w_init"] * np.eye(2), w_max, pos_params, neg_params=neg_params)
    delta_g = nominal.delta_g
    eta_prime = delta_g / w_max
    to_weight = w_max / delta_g

    model = nominal if task["bridge_model"] == "nominal" and not cfg.ideal else None
    sources = src_rng.laplace(scale=task["source_scale"], size=(task["n_samples"], 2))
    log = MetricsLog(cfg.seed)
    clipped = 0
    for t, s in enumerate(sources, start=1):
        x = mixing @ s
        current = read_ideal(state, x) if r_wire == 0 else read_nonideal(state, x, geometry)
        u = current * to_weight
        dw = eghr_update(x, u, rule)
        program = delta_w_to_pulses(dw, state, eta_prime, task["bridge_mode"], model=model)
        clipped += int(program.clipped.sum())
        state = apply_program(state, program, rounding, write_rng, noise)
        if t % task["log_every"] == 0:
            w = state.weights(w_max, delta_g)
            log.log("amari", t, amari_index(w, mixing))
            for (i, j), value in np.ndenumerate(w):
                log.log(f"w_{i}{j}", t, value)
            log.log("clipped_updates", t, clipped)

    w = state.weights(w_max, delta_g)
    lines = ["row,col,weight,g_pos_nS,g_neg_nS"]
    for (i, j), value in np.ndenumerate(w):
        lines.append(f"{i},{j},{float(value)!r},{float(state.g_pos[i, j])!r},{float(state.g_neg[i, j])!r}")
    summary = {
        "final_amari": log.last("amari"),
        "ideal": cfg.ideal,
        "writes": int(state.pos.write_count.sum() + state.neg.write_count.sum()),
        "clipped_updates": clipped,
    }
    return RunResult(cfg, log, {"weights.csv": "\n".join(lines) + "\n"}, summary)
