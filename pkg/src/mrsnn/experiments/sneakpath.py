"""Sneak-path profile of a random ON/OFF pattern, whole array vs partitioned."""

from __future__ import annotations

import numpy as np

from ..crossbar import (
    NS_PER_SIEMENS,
    CrossbarGeometry,
    effective_conductance,
    effective_conductance_partitioned,
    effective_csv_text,
    relative_error,
)
from ..errors import ConfigError
from ..metrics import MetricsLog
from .base import RunResult, seed_streams

DEFAULTS = {
    "rows": 128,
    "cols": 128,
    "partition": 32,
    "r_on": 1e3,
    "r_off": 1e6,
    "r_wire": 0.1,
    "p_on": 0.5,
}
XL = {"rows": 512, "cols": 512, "partition": 64}


def random_pattern(shape, r_on, r_off, p_on, rng) -> np.ndarray:
    """Conductances in nS, each cell ON with probability ``p_on``."""
    on = rng.random(shape) < p_on
    return np.where(on, NS_PER_SIEMENS / r_on, NS_PER_SIEMENS / r_off)


def run_sneakpath_profile(cfg) -> RunResult:
    """Effective one-hot conductance of every cell with and without partitioning.

    ``cfg.geometry`` overrides the task's array size, wire resistance and
    partition when given. ``cfg.xl`` switches to the 512x512 / 64x64 layout.
    """
    task = cfg.task_params(DEFAULTS)
    if cfg.xl:
        task.update(XL)
    if cfg.geometry is not None:
        g = cfg.geometry
        geometry = CrossbarGeometry(g.rows, g.cols, g.r_wire,
                                    g.partition_rows or task["partition"],
                                    g.partition_cols or task["partition"])
    else:
        geometry = CrossbarGeometry(task["rows"], task["cols"], task["r_wire"],
                                    task["partition"], task["partition"])
    if not (task["r_on"] > 0 and task["r_off"] > 0):
        raise ConfigError("r_on and r_off must be positive")

    (rng,) = seed_streams(cfg.seed, 1)
    g = random_pattern((geometry.rows, geometry.cols), task["r_on"], task["r_off"],
                       task["p_on"], rng)
    whole = effective_conductance(g, geometry.r_wire)
    parts = effective_conductance_partitioned(g, geometry)
    rel_whole = relative_error(whole, g)
    rel_parts = relative_error(parts, g)

    log = MetricsLog(cfg.seed)
    summary = {"rows": geometry.rows, "cols": geometry.cols, "r_wire": geometry.r_wire,
               "partition": list(geometry.block_shape)}
    for name, rel in (("unpartitioned", rel_whole), ("partitioned", rel_parts)):
        stats = {"max": float(rel.max()), "mean": float(rel.mean()),
                 "origin": float(rel[0, 0]), "corner": float(rel[-1, -1])}
        for key, value in stats.items():
            log.log(f"{name}_{key}_rel_error", 0, value)
        summary[name] = stats
    summary["max_error_reduction"] = (summary["unpartitioned"]["max"]
                                      / summary["partitioned"]["max"]
                                      if summary["partitioned"]["max"] > 0 else float("inf"))
    artifacts = {
        "effective_unpartitioned.csv": effective_csv_text(g, whole),
        "effective_partitioned.csv": effective_csv_text(g, parts),
    }
    return RunResult(cfg, log, artifacts, summary)
