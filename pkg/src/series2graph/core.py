"""Core series types, the z-normalized distance, and trivial-match logic.

Everything here is immutable after construction and safe to share across
workers; the module-level functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantSequenceError


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional sequence")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Ordered sequence of finite real values with a text label.

    Parameters
    ----------
    values:
        One-dimensional sequence of at least two finite numbers.
    name:
        Free-form label used in reports and file names.
    """

    values: np.ndarray
    name: str = "series"

    def __post_init__(self):
        arr = _as_float_array(self.values)
        if arr.size < 2:
            raise ValueError("a series needs at least 2 points")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series values must be finite (no NaN/inf)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def subsequence(self, start: int, length: int) -> np.ndarray:
        SubseqRef(start, length).check_within(len(self))
        return self.values[start : start + length]


@dataclass(frozen=True)
class SubseqRef:
    """Reference to the half-open window [start, start + length)."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 0:
            raise ValueError("start must be >= 0")
        if self.length <= 0:
            raise ValueError("length must be positive")

    def check_within(self, series_length: int) -> None:
        if self.start + self.length > series_length:
            raise ValueError(
                f"window [{self.start}, {self.start + self.length}) exceeds "
                f"series of length {series_length}"
            )

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class AnnotationSet:
    """Known-anomaly intervals as sorted, non-overlapping (start, length) pairs.

    All intervals are half-open: start inclusive, start + length exclusive.
    """

    intervals: tuple = field(default_factory=tuple)

    def __post_init__(self):
        cleaned = tuple((int(s), int(n)) for s, n in self.intervals)
        prev_end = None
        for start, length in cleaned:
            if start < 0 or length <= 0:
                raise ValueError(f"invalid interval ({start}, {length})")
            if prev_end is not None and start < prev_end:
                raise ValueError("intervals must be sorted and non-overlapping")
            prev_end = start + length
        object.__setattr__(self, "intervals", cleaned)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def check_within(self, series_length: int) -> None:
        if self.intervals and self.intervals[-1][0] + self.intervals[-1][1] > series_length:
            raise ValueError("annotations exceed the series bounds")

    def overlapping(self, start: int, length: int) -> list[int]:
        """Indices of intervals overlapping the half-open window [start, start+length)."""
        hits = []
        for idx, (a_start, a_len) in enumerate(self.intervals):
            if start < a_start + a_len and a_start < start + length:
                hits.append(idx)
        return hits


def znorm(x) -> np.ndarray:
    """Z-score a sequence with the population (divide-by-n) deviation.

    Raises
    ------
    ConstantSequenceError
        If the sequence has zero variance; the distance is undefined there
        and silently substituting a zero vector would corrupt rankings.
    """
    arr = _as_float_array(x)
    sigma = float(np.std(arr))
    if sigma == 0.0:
        raise ConstantSequenceError("cannot z-normalize a constant sequence")
    return (arr - np.mean(arr)) / sigma


def znorm_distance(a, b) -> float:
    """Euclidean distance between the z-scores of two equal-length sequences."""
    a = _as_float_array(a)
    b = _as_float_array(b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    if a.size < 2:
        raise ValueError("need at least 2 points")
    diff = znorm(a) - znorm(b)
    return float(np.sqrt(np.sum(diff * diff)))


def is_trivial_match(i: int, a: int, length: int) -> bool:
    """True when windows starting at i and a overlap by more than half their length."""
    return abs(i - a) < length / 2
