"""Experiment configuration: JSON in, resolved dataclass out."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .crossbar import CrossbarGeometry
from .device import DEFAULT_VARIATION, DeviceParams, VariationSpec, preset
from .errors import ConfigError
from .plasticity import RuleConfig

EXPERIMENTS = ("ica", "sneakpath", "erbp-class", "delay-report", "device-curves")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    preset: str = "mo-tiox-tin-3v"
    device: Optional[DeviceParams] = None
    variation: VariationSpec = DEFAULT_VARIATION
    geometry: Optional[CrossbarGeometry] = None
    rule: Optional[RuleConfig] = None
    task: dict = field(default_factory=dict)
    out_dir: Optional[str] = None
    ideal: bool = False
    xl: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.device is None:
            preset(self.preset)  # fail early on unknown or inconsistent presets

    def device_params(self) -> DeviceParams:
        return self.device if self.device is not None else preset(self.preset)

    def task_params(self, defaults: dict) -> dict:
        unknown = set(self.task) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown task parameters for {self.experiment}: {sorted(unknown)}")
        return {**defaults, **self.task}

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "preset": self.preset,
            "device": self.device.to_dict() if self.device is not None else None,
            "variation": self.variation.to_dict(),
            "geometry": self.geometry.to_dict() if self.geometry is not None else None,
            "rule": self.rule.to_dict() if self.rule is not None else None,
            "task": dict(sorted(self.task.items())),
            "out_dir": self.out_dir,
            "ideal": self.ideal,
            "xl": self.xl,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' field")
        if "seed" not in data:
            raise ConfigError("config needs a 'seed' field")
        nested = {
            "device": DeviceParams,
            "variation": VariationSpec,
            "geometry": CrossbarGeometry,
            "rule": RuleConfig,
        }
        for key, kind in nested.items():
            value = data.get(key)
            if isinstance(value, dict):
                try:
                    data[key] = kind.from_dict(value)
                except TypeError as exc:
                    raise ConfigError(f"bad {key}: {exc}") from None
        if not isinstance(data.get("task", {}), dict):
            raise ConfigError("task must be a JSON object")
        return cls(**data)


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(data)
