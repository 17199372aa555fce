"""Input-delay table for partitioned crossbars (Elmore wire + driver terms)."""

from __future__ import annotations

from ..crossbar import CrossbarGeometry, delay_estimate
from ..errors import ConfigError
from ..metrics import MetricsLog
from .base import RunResult

DEFAULTS = {
    "sizes": [128, 256, 512],
    "partitions": [32, 64, 128],
    "r_wire": 10.0,
    "driver_capacitance": 1e-15,
    "driver_delay": 10e-9,
    "sense_delay": 10e-9,
}


def run_delay_report(cfg) -> RunResult:
    """Tabulate ``delay_estimate`` over array and partition sizes.

    ``layer_s`` adds the sense-amplifier delay to the partitioned input
    delay. Partitions that do not divide the array size are skipped.
    """
    task = cfg.task_params(DEFAULTS)
    if cfg.geometry is not None:
        g = cfg.geometry
        sizes, partitions = [g.rows], [g.partition_rows or g.rows]
        r_wire, c_d, tau_d = g.r_wire, g.driver_capacitance, g.driver_delay
    else:
        sizes, partitions = task["sizes"], task["partitions"]
        r_wire, c_d, tau_d = task["r_wire"], task["driver_capacitance"], task["driver_delay"]
    if min(r_wire, c_d, tau_d, task["sense_delay"]) < 0:
        raise ConfigError("delay parameters must be nonnegative")

    log = MetricsLog(cfg.seed)
    lines = ["rows,partition_rows,n_partitions,input_delay_s,layer_delay_s"]
    rows = []
    for size in sizes:
        for part in partitions:
            if part > size or size % part:
                continue
            geometry = CrossbarGeometry(size, size, r_wire, part, part, c_d, tau_d)
            delay = delay_estimate(geometry)
            layer = delay + task["sense_delay"]
            lines.append(f"{size},{part},{size // part},{delay!r},{layer!r}")
            log.log(f"input_delay_s_{size}", part, delay)
            log.log(f"layer_delay_s_{size}", part, layer)
            rows.append({"rows": size, "partition_rows": part, "input_delay_s": delay,
                         "layer_delay_s": layer})
    if not rows:
        raise ConfigError("no partition size divides any array size")
    summary = {"r_wire": r_wire, "driver_capacitance": c_d, "driver_delay": tau_d,
               "sense_delay": task["sense_delay"], "table": rows}
    return RunResult(cfg, log, {"delay.csv": "\n".join(lines) + "\n"}, summary)
