"""Slots-to-accuracy comparison across sets of trace CSVs."""
from __future__ import annotations

import csv
import glob
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dsgd import TRACE_COLUMNS

DEFAULT_THRESHOLDS = (0.6, 0.7, 0.9)


class TraceFormatError(ValueError):
    pass


def read_trace(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise TraceFormatError(f"{path}: header must be {','.join(TRACE_COLUMNS)}")
    body = rows[1:]
    if not body:
        raise TraceFormatError(f"{path}: no records")
    try:
        cols = {name: np.array([float(r[k]) for r in body]) for k, name in enumerate(TRACE_COLUMNS)}
    except (ValueError, IndexError):
        raise TraceFormatError(f"{path}: malformed record") from None
    if np.any(np.diff(cols["cum_slots"]) < 0):
        raise TraceFormatError(f"{path}: cum_slots decreases")
    return cols


def slots_to_threshold(trace: dict[str, np.ndarray], threshold: float) -> Optional[int]:
    """Cumulative slots at the first round whose test accuracy reaches ``threshold``."""
    hit = np.flatnonzero(trace["test_acc"] >= threshold)
    return int(trace["cum_slots"][hit[0]]) if hit.size else None


@dataclass(frozen=True)
class ThresholdStats:
    method: str
    threshold: float
    runs: int
    reached: int
    mean_slots: Optional[float]
    std_slots: Optional[float]


@dataclass
class ComparisonReport:
    thresholds: tuple[float, ...]
    rows: list[ThresholdStats]

    def get(self, method: str, threshold: float) -> ThresholdStats:
        return next(r for r in self.rows if r.method == method and r.threshold == threshold)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("method,threshold,runs,reached,mean_slots,std_slots\n")
        for r in self.rows:
            mean = "not reached" if r.mean_slots is None else repr(r.mean_slots)
            std = "not reached" if r.std_slots is None else repr(r.std_slots)
            buf.write(f"{r.method},{r.threshold!r},{r.runs},{r.reached},{mean},{std}\n")
        return buf.getvalue()


def compare_traces(
    trace_sets: dict[str, Sequence[dict[str, np.ndarray]]],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> ComparisonReport:
    """Mean and (population) std of slots-to-threshold over the runs that reach it."""
    rows = []
    for method, traces in trace_sets.items():
        for t in thresholds:
            hits = [s for s in (slots_to_threshold(tr, t) for tr in traces) if s is not None]
            mean = float(np.mean(hits)) if hits else None
            std = float(np.std(hits)) if hits else None
            rows.append(ThresholdStats(method, float(t), len(traces), len(hits), mean, std))
    return ComparisonReport(tuple(float(t) for t in thresholds), rows)


def load_trace_sets(specs: Sequence[str]) -> dict[str, list[dict[str, np.ndarray]]]:
    """``label=glob`` (or bare ``glob``, labelled by itself) to parsed traces."""
    sets = {}
    for spec in specs:
        label, _, pattern = spec.rpartition("=")
        label = label or pattern
        paths = sorted(glob.glob(pattern))
        if not paths:
            raise TraceFormatError(f"no trace files match {pattern!r}")
        sets[label] = [read_trace(p) for p in paths]
    return sets
