"""Brute-force nearest-neighbor distance profile and discord extraction.

This is the comparison baseline and correctness oracle: for every window it
finds the m-th smallest z-normalized distance to any non-overlapping window.
Windows whose starts differ by less than half the window length are trivial
matches and never count as neighbors. Up to EXACT_WINDOW_LIMIT windows the
search is exhaustive; beyond that, neighbor candidates are a uniform
subsample so the baseline stays usable on 100K-point series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries, _as_float_array
from .errors import InputTooShortError
from .scoring import Ranking

EXACT_WINDOW_LIMIT = 4096
SUBSAMPLE_TARGET = 1024
_QUERY_BLOCK = 8192


@dataclass(frozen=True)
class NnProfile:
    """Per-position m-th nearest-neighbor distances under z-normalization."""

    distances: np.ndarray
    pattern_length: int
    order: int
    flagged: np.ndarray  # constant windows, or windows short of m neighbors

    def __post_init__(self):
        for name in ("distances", "flagged"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.distances.size)


def _znorm_windows(values: np.ndarray, length: int):
    windows = np.lib.stride_tricks.sliding_window_view(values, length)
    mean = windows.mean(axis=1, keepdims=True)
    std = windows.std(axis=1, keepdims=True)
    constant = std[:, 0] == 0.0
    safe_std = np.where(std == 0.0, 1.0, std)
    return np.ascontiguousarray((windows - mean) / safe_std), constant


def _exact_profile(z, constant, pattern_length, order):
    n = z.shape[0]
    distances = np.full(n, np.inf)
    flagged = constant.copy()
    half = pattern_length / 2
    idx = np.arange(n)
    for i in range(n):
        if constant[i]:
            continue
        admissible = (np.abs(idx - i) >= half) & ~constant
        if not admissible.any():
            flagged[i] = True
            continue
        diff = z[admissible] - z[i]
        dists = np.sqrt(np.sum(diff * diff, axis=1))
        if dists.size < order:
            flagged[i] = True
            distances[i] = float(np.max(dists))
            continue
        distances[i] = float(np.partition(dists, order - 1)[order - 1])
    return distances, flagged


def _subsampled_profile(z, constant, pattern_length, order):
    """Distances against a uniform candidate subsample, via the Gram identity.

    Under population z-scoring every window has squared norm equal to its
    length, so d^2 = 2 * l - 2 <z_i, z_j>; one matmul per query block covers
    all candidates at once.
    """
    n = z.shape[0]
    stride = math.ceil(n / SUBSAMPLE_TARGET)
    cand = np.arange(0, n, stride)
    cand = cand[~constant[cand]]
    distances = np.full(n, np.inf)
    flagged = constant.copy()
    if cand.size < order:
        return distances, np.ones(n, dtype=bool)
    half = pattern_length / 2
    z_cand = z[cand].T
    for start in range(0, n, _QUERY_BLOCK):
        stop = min(start + _QUERY_BLOCK, n)
        gram = z[start:stop] @ z_cand
        sq = np.maximum(2.0 * pattern_length - 2.0 * gram, 0.0)
        trivial = np.abs(np.arange(start, stop)[:, None] - cand[None, :]) < half
        sq[trivial] = np.inf
        sq[constant[start:stop]] = np.inf
        enough = np.sum(np.isfinite(sq), axis=1) >= order
        kth = np.sqrt(np.partition(sq, order - 1, axis=1)[:, order - 1])
        block = np.where(enough, kth, np.inf)
        short = ~enough & ~constant[start:stop]
        if short.any():
            with np.errstate(invalid="ignore"):
                best = np.sqrt(np.where(np.isfinite(sq), sq, -np.inf).max(axis=1))
            block[short] = np.where(np.isfinite(best[short]), best[short], np.inf)
            flagged[start:stop][short] = True
        distances[start:stop] = block
    return distances, flagged


def nn_profile(series: TimeSeries | np.ndarray, pattern_length: int, order: int = 1) -> NnProfile:
    """m-th NN distance per window, trivial matches excluded.

    Constant windows are flagged and excluded both as queries and as
    neighbors. A window with fewer than ``order`` admissible neighbors gets
    the largest finite distance and is flagged. Past EXACT_WINDOW_LIMIT
    windows the neighbor set is a uniform subsample of about
    SUBSAMPLE_TARGET candidates instead of every window.
    """
    values = series.values if isinstance(series, TimeSeries) else _as_float_array(series)
    if order < 1:
        raise ValueError("order must be >= 1")
    if values.size < 2 * pattern_length:
        raise InputTooShortError(
            f"series shorter than 2*l: need at least {2 * pattern_length} points, "
            f"got {values.size}"
        )
    z, constant = _znorm_windows(values, pattern_length)
    if z.shape[0] <= EXACT_WINDOW_LIMIT:
        distances, flagged = _exact_profile(z, constant, pattern_length, order)
    else:
        distances, flagged = _subsampled_profile(z, constant, pattern_length, order)
    finite = distances[np.isfinite(distances)]
    fill = float(np.max(finite)) if finite.size else 0.0
    distances[~np.isfinite(distances)] = fill
    flagged = flagged | ~np.isfinite(distances)
    return NnProfile(
        distances=distances, pattern_length=pattern_length, order=order, flagged=flagged
    )


def top_discords(profile: NnProfile, k: int) -> Ranking:
    """Largest-distance positions with half-length overlap masking.

    Flagged positions never rank. Returns fewer than k items with the
    ``truncated`` flag when the maskable slots run out.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    distances = profile.distances
    radius = (profile.pattern_length - 1) // 2
    masked = profile.flagged.copy()
    items = []
    while len(items) < k:
        if masked.all():
            return Ranking(items=tuple(items), query_length=profile.pattern_length, truncated=True)
        candidate = np.where(masked, -np.inf, distances)
        pos = int(np.argmax(candidate))
        items.append((pos, float(distances[pos])))
        masked[max(0, pos - radius) : pos + radius + 1] = True
    return Ranking(items=tuple(items), query_length=profile.pattern_length, truncated=False)


def nn_profile_to_csv(profile: NnProfile) -> str:
    lines = ["position,nn_distance"]
    for pos, dist in enumerate(profile.distances):
        lines.append(f"{pos},{float(dist)!r}")
    return "\n".join(lines) + "\n"


def discord_ranking_to_csv(ranking: Ranking) -> str:
    """Discord scores are already anomaly-oriented distances; no negation."""
    lines = ["rank,position,score"]
    for rank, (pos, score) in enumerate(ranking.items, start=1):
        lines.append(f"{rank},{pos},{float(score)!r}")
    return "\n".join(lines) + "\n"
