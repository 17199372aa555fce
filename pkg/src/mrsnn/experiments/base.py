from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import ExperimentConfig
from ..metrics import MetricsLog


@dataclass
class RunResult:
    config: ExperimentConfig
    metrics: MetricsLog
    artifacts: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def seed_streams(seed: int, n: int):
    """Independent generators split off one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


_RUNNERS = {
    "ica": ("ica", "run_ica"),
    "sneakpath": ("sneakpath", "run_sneakpath_profile"),
    "erbp-class": ("erbp", "run_erbp_classification"),
    "delay-report": ("delay", "run_delay_report"),
    "device-curves": ("curves", "run_device_curves"),
}


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    import importlib

    module, name = _RUNNERS[cfg.experiment]
    return getattr(importlib.import_module(f".{module}", __package__), name)(cfg)


def write_run(result: RunResult, out_dir) -> Path:
    """Persist config.json, metrics.csv and every artifact into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(result.config.to_dict(), indent=2) + "\n")
    result.metrics.write_csv(out / "metrics.csv")
    for name, text in result.artifacts.items():
        (out / name).write_text(text)
    if result.summary:
        (out / "summary.json").write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
    return out
