"""Experiment runners. Each is a pure function of its configuration."""

from .base import RunResult, run_experiment, write_run

__all__ = ["RunResult", "run_experiment", "write_run"]
