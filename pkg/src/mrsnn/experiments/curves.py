"""Potentiation/depression curves of the nominal device and sampled devices."""

from __future__ import annotations

import numpy as np

from ..device import LTD, LTP, conductance_after_pulses, sample_param_array
from ..metrics import MetricsLog
from .base import RunResult, seed_streams

DEFAULTS = {
    "n_pulses": 400,
    "n_devices": 100,
}


def run_device_curves(cfg) -> RunResult:
    """G against pulse number for LTP and LTD, nominal plus sampled devices.

    The CSV has one row per ``(device, polarity, pulse)``; device ``-1`` is
    the nominal curve. In ideal mode no devices are sampled.
    """
    task = cfg.task_params(DEFAULTS)
    nominal = cfg.device_params()
    k = 0 if cfg.ideal else int(task["n_devices"])
    n = np.arange(int(task["n_pulses"]) + 1, dtype=float)
    (rng,) = seed_streams(cfg.seed, 1)
    sampled = sample_param_array(nominal, cfg.variation, (k, 1), rng) if k else None

    curves = {}
    for polarity in (LTP, LTD):
        nom = np.asarray(conductance_after_pulses(nominal, polarity, n))
        rows = [nom]
        if k:
            rows.extend(np.asarray(conductance_after_pulses(sampled, polarity, n[None, :])))
        curves[polarity] = np.vstack(rows)

    lines = ["device,polarity,pulse,conductance_nS"]
    for polarity, table in curves.items():
        for d, curve in enumerate(table, start=-1):
            lines.extend(f"{d},{polarity},{p},{float(gv)!r}" for p, gv in enumerate(curve))

    log = MetricsLog(cfg.seed)
    for polarity, table in curves.items():
        for p in range(0, n.size, max(1, n.size // 20)):
            log.log(f"{polarity}_nominal_nS", p, table[0, p])
            if k:
                log.log(f"{polarity}_sampled_std_nS", p, table[1:, p].std())
    summary = {"n_devices": k, "n_pulses": int(n[-1]),
               "nominal_ltp_final_nS": float(curves[LTP][0, -1]),
               "nominal_ltd_final_nS": float(curves[LTD][0, -1])}
    if k:
        final = curves[LTP][1:, -1]
        summary["sampled_ltp_final_cv"] = float(final.std() / final.mean())
    return RunResult(cfg, log, {"curves.csv": "\n".join(lines) + "\n"}, summary)
