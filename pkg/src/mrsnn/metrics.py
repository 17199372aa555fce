"""Demixing metric and the flat metric time-series used by every experiment."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateMatrix, DimensionMismatch

METRICS_HEADER = ("metric", "step", "value", "seed")


def amari_index(w, a) -> float:
    """Amari index of ``P = w @ a``, zero iff ``P`` is a scaled permutation.

    Normalised by ``2 K (K - 1)`` so the result lies in [0, 1].
    """
    p = np.abs(np.asarray(w, dtype=float) @ np.asarray(a, dtype=float))
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimensionMismatch(f"w @ a must be square, got shape {p.shape}")
    k = p.shape[0]
    if k < 2:
        return 0.0
    row_max = p.max(axis=1)
    col_max = p.max(axis=0)
    if np.any(row_max == 0) or np.any(col_max == 0):
        raise DegenerateMatrix("w @ a has an all-zero row or column")
    rows = np.sum(p.sum(axis=1) / row_max - 1.0)
    cols = np.sum(p.sum(axis=0) / col_max - 1.0)
    return float((rows + cols) / (2.0 * k * (k - 1)))


@dataclass(frozen=True)
class ResultRecord:
    metric: str
    step: int
    value: float
    seed: int


class MetricsLog:
    """Append-only collection of :class:`ResultRecord` rows."""

    def __init__(self, seed: int):
        self.seed = seed
        self.records: list[ResultRecord] = []
        self._last_step: dict[str, int] = {}

    def log(self, metric: str, step: int, value) -> None:
        last = self._last_step.get(metric)
        if last is not None and step < last:
            raise ValueError(f"step for {metric!r} went backwards: {step} < {last}")
        self._last_step[metric] = step
        self.records.append(ResultRecord(metric, int(step), float(value), self.seed))

    def series(self, metric: str):
        rows = [r for r in self.records if r.metric == metric]
        return np.array([r.step for r in rows]), np.array([r.value for r in rows])

    def last(self, metric: str) -> float:
        return self.series(metric)[1][-1]

    def write_csv(self, path) -> None:
        write_records(path, self.records)


def write_records(path, records: Iterable[ResultRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in records:
            writer.writerow([r.metric, r.step, repr(r.value), r.seed])


def read_records(path) -> list[ResultRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {reader.fieldnames}")
        return [ResultRecord(r["metric"], int(r["step"]), float(r["value"]), int(r["seed"]))
                for r in reader]
