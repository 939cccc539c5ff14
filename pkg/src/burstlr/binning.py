"""Partition timestamped observations into unit-time bins.

Bin ``p`` (1-based) holds the observations with timestamp in the
half-open interval ``(p-1, p]``; values outside ``(0, P]`` are dropped
and counted, never fatal.  ``shift_origin`` re-bins after subtracting a
sub-unit offset, which is how origin-of-time sweeps are run.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


class TimedObservation(NamedTuple):
    t: float
    x: float


@dataclass(frozen=True)
class BinnedDataset:
    """P unit-time bins of observation values plus the out-of-range drop count."""

    P: int
    bins: tuple[np.ndarray, ...]
    dropped: int = 0

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if len(self.bins) != self.P:
            raise ValueError("bins length must equal P")

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(b.size) for b in self.bins)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def pooled(self, first_bin: int, last_bin: int) -> np.ndarray:
        """Concatenated values of bins first_bin..last_bin (1-based, inclusive)."""
        return np.concatenate(self.bins[first_bin - 1 : last_bin])


def _bin_index(t: float) -> int:
    # (p-1, p] membership: integers land in their own bin
    return int(math.ceil(t))


def bin_observations(samples: Iterable[TimedObservation], P: int) -> BinnedDataset:
    """Bin observations by timestamp; t <= 0 or t > P are dropped and counted."""
    if P < 1:
        raise ValueError("P must be >= 1")
    buckets: list[list[float]] = [[] for _ in range(P)]
    dropped = 0
    for t, x in samples:
        if t <= 0.0 or t > P:
            dropped += 1
            continue
        buckets[_bin_index(t) - 1].append(float(x))
    bins = tuple(np.asarray(b, dtype=float) for b in buckets)
    return BinnedDataset(P=P, bins=bins, dropped=dropped)


def shift_origin(
    samples: Iterable[TimedObservation], offset: float, P: int
) -> BinnedDataset:
    """Bin by shifted time t' = t - offset; observations with t' <= 0 drop out."""
    if not 0.0 <= offset < 1.0:
        raise ValueError("offset must lie in [0, 1)")
    shifted = (TimedObservation(t - offset, x) for t, x in samples)
    return bin_observations(shifted, P)


# -- event-file ingestion (CSV `t,x` or JSON-lines) ---------------------------


def read_events_csv(path) -> list[TimedObservation]:
    events: list[TimedObservation] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return events
        cols = [c.strip().lower() for c in header]
        if cols[:2] != ["t", "x"]:
            raise ValueError(f"{path}: line 1: expected header 't,x', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                events.append(TimedObservation(float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return events


def read_events_jsonl(path) -> list[TimedObservation]:
    events: list[TimedObservation] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                events.append(TimedObservation(float(rec["t"]), float(rec["x"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return events


def read_events(path) -> list[TimedObservation]:
    """Load events from a `.jsonl`/`.ndjson` file or a CSV with header ``t,x``."""
    name = str(path).lower()
    if name.endswith((".jsonl", ".ndjson")):
        return read_events_jsonl(path)
    return read_events_csv(path)


def write_events_csv(path, events: Iterable[TimedObservation]) -> None:
    """Write events as CSV; floats use repr so a re-read is bit-identical."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x"])
        for t, x in events:
            writer.writerow([repr(float(t)), repr(float(x))])
