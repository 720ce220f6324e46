"""Tick-series ingestion into daily functional curves.

Timestamps are reduced to fractional days.  Day k is complete when it
carries exactly ``day_length`` ticks in one of two layouts:

  shared   -- ticks at k, k + 1/(L-1), ..., k + 1 (the boundary tick is
              shared with the next day, matching how paths are split),
  half-open-- ticks at k, k + 1/L, ..., k + (L-1)/L (typical exchange
              feeds; the next day starts at k + 1).

Complete days become curves on the within-day offset grid with a unit
endpoint atom; incomplete or misaligned days are dropped and reported.
Values are centered by the global mean of the retained ticks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IngestionError
from .grids import FunctionalSample, Grid

__all__ = ["TickSeries", "IngestResult", "read_ticks_csv", "ingest_ticks"]

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class TickSeries:
    """Raw tick data: strictly increasing instants and values."""

    timestamps: np.ndarray
    values: np.ndarray
    frequency: Optional[float] = None  # nominal spacing, in days

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if ts.ndim != 1 or ts.shape != vals.shape or ts.size < 2:
            raise IngestionError("need equal-length 1-d timestamps and values")
        if np.any(np.diff(ts) <= 0):
            raise IngestionError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return self.timestamps.size


@dataclass(frozen=True)
class IngestResult:
    """Daily curves plus the drop report and centering metadata."""

    sample: FunctionalSample
    dropped_days: tuple
    mean_value: float
    values: np.ndarray  # retained ticks, centered, in time order
    delta: float        # nominal tick spacing in days
    mode: str           # "shared" or "half-open"

    @property
    def n_dropped(self):
        return len(self.dropped_days)


def _parse_timestamp_column(raw):
    try:
        return np.array([float(tok) for tok in raw])
    except ValueError:
        stamps = np.array(raw, dtype="datetime64[s]")
        day0 = stamps[0].astype("datetime64[D]")
        return (stamps - day0) / np.timedelta64(1, "D")


def read_ticks_csv(path):
    """Read a timestamp,value CSV (numeric day fractions or ISO datetimes)."""
    raw_ts, raw_vals = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            token = row[0].strip()
            try:
                float(row[1])
            except (ValueError, IndexError):
                continue  # header row
            raw_ts.append(token)
            raw_vals.append(float(row[1]))
    if len(raw_ts) < 2:
        raise IngestionError(f"{path}: no usable tick rows")
    return TickSeries(_parse_timestamp_column(raw_ts), np.array(raw_vals))


def _day_ticks(series, day):
    lo = np.searchsorted(series.timestamps, day - _ALIGN_TOL)
    hi = np.searchsorted(series.timestamps, day + 1.0 + _ALIGN_TOL)
    return lo, hi


def _classify_day(series, day, day_length):
    """Return (mode, index range) when day k is complete, else (None, None)."""
    lo, hi = _day_ticks(series, day)
    ts = series.timestamps[lo:hi]
    if ts.size == 0:
        return None, None
    has_boundary = ts.size > 0 and abs(ts[-1] - (day + 1.0)) <= _ALIGN_TOL
    inner = ts.size - 1 if has_boundary else ts.size
    if day_length is None:
        candidates = ("shared", "half-open")
    else:
        candidates = []
        if has_boundary and inner + 1 == day_length:
            candidates.append("shared")
        if inner == day_length:
            candidates.append("half-open")
    for mode in candidates:
        if mode == "shared":
            if not has_boundary:
                continue
            count = inner + 1
        else:
            count = inner
        if day_length is not None and count != day_length:
            continue
        if count < 2:
            continue
        return mode, (lo, lo + count)
    return None, None


def ingest_ticks(csv_path, day_length=None):
    """Turn a tick CSV into daily curves on [0, 1] with a unit endpoint atom.

    ``day_length`` is the number of ticks per complete day; when None it
    is inferred from the first complete-looking day.  Days whose tick
    count or offsets do not match are dropped (reported in the result).
    Raises IngestionError when no complete day exists.
    """
    series = csv_path if isinstance(csv_path, TickSeries) else read_ticks_csv(csv_path)
    first_day = int(np.floor(series.timestamps[0] + _ALIGN_TOL))
    last_day = int(np.ceil(series.timestamps[-1] - _ALIGN_TOL))
    mode = None
    offsets = None
    rows = []
    row_days = []
    dropped = []
    for day in range(first_day, last_day):
        day_mode, span = _classify_day(series, day, day_length)
        if day_mode is None or (mode is not None and day_mode != mode):
            dropped.append(day)
            continue
        lo, hi = span
        day_offsets = series.timestamps[lo:hi] - day
        if offsets is None:
            mode = day_mode
            offsets = day_offsets
            if day_length is None:
                day_length = hi - lo
        elif (hi - lo) != offsets.size or np.max(np.abs(day_offsets - offsets)) > _ALIGN_TOL:
            dropped.append(day)
            continue
        rows.append(series.values[lo:hi])
        row_days.append(day)
    if not rows:
        raise IngestionError("no complete day of ticks found")
    values = np.array(rows)
    # shared-boundary ticks appear in two curves but only once in the series;
    # deduplicate between consecutive retained days only
    flat_parts = [values[0]]
    for i in range(1, len(rows)):
        if mode == "shared" and row_days[i] == row_days[i - 1] + 1:
            flat_parts.append(values[i][1:])
        else:
            flat_parts.append(values[i])
    unique = np.concatenate(flat_parts)
    mean_value = float(unique.mean())
    grid = Grid(offsets, endpoint_atom=1.0)
    sample = FunctionalSample(values - mean_value, grid)
    delta = float(np.median(np.diff(offsets)))
    return IngestResult(sample, tuple(dropped), mean_value, unique - mean_value,
                        delta, mode)
