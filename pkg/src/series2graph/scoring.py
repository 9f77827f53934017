"""Normality scoring of query subsequences against a pattern graph.

A query is converted to the node path its projected trajectory traverses;
the path's score averages w(edge) * (deg(src) - 1) over its steps, divided
by the query length. Transitions the graph never saw contribute zero, so
unseen behavior scores like the rarest seen behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TimeSeries, _as_float_array
from .errors import InputTooShortError, QueryTooShortError
from .graph import PatternGraph, _collapse_runs, _trace_crossings, map_point_to_node
from .embedding import embed_query


@dataclass(frozen=True)
class NodePath:
    """Sequence of node ids traversed by one query subsequence."""

    node_ids: np.ndarray
    source: str = "query"
    low_confidence: bool = False

    def __post_init__(self):
        arr = np.asarray(self.node_ids, dtype=np.int64)
        arr.flags.writeable = False
        object.__setattr__(self, "node_ids", arr)

    def __len__(self) -> int:
        return int(self.node_ids.size)


@dataclass(frozen=True)
class NormalityProfile:
    """Per-start-position normality scores for one query length."""

    scores: np.ndarray
    query_length: int
    smoothed: bool

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return int(self.scores.size)

    def anomaly_scores(self) -> np.ndarray:
        """User-facing orientation: higher means more anomalous."""
        return -self.scores


@dataclass(frozen=True)
class Ranking:
    """Top anomaly positions with their normality scores, plus truncation flag."""

    items: tuple  # ((position, normality_score), ...)
    query_length: int
    truncated: bool = False

    def positions(self) -> list[int]:
        return [pos for pos, _ in self.items]


def time2path(graph: PatternGraph, query) -> NodePath:
    """Convert a query sequence into the node path its trajectory traverses.

    A trajectory that never crosses a ray (too short, or entirely inside one
    sector) falls back to per-point nearest nodes and is flagged
    ``low_confidence``, as is any crossing on a ray the graph has no node for.
    """
    points = embed_query(graph.embedding, query)
    if points.shape[0] >= 2:
        _, members, used_fallback = _trace_crossings(points, graph.nodes, graph.num_angles)
    else:
        members, used_fallback = np.empty(0, dtype=np.int64), False
    if members.size == 0:
        ids = np.array(
            [map_point_to_node(graph.nodes, graph.num_angles, p) for p in points],
            dtype=np.int64,
        )
        return NodePath(node_ids=_collapse_runs(ids), low_confidence=True)
    sequence = members if graph.self_loops else _collapse_runs(members)
    return NodePath(node_ids=sequence, low_confidence=used_fallback)


def path_normality(graph: PatternGraph, path: NodePath, query_length: int) -> float:
    """Average step contribution of a path, normalized by the query length."""
    if query_length < 1:
        raise ValueError("query_length must be >= 1")
    ids = path.node_ids
    total = 0.0
    for src, dst in zip(ids[:-1], ids[1:]):
        total += graph.step_value(int(src), int(dst))
    return total / query_length


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with symmetric shrinking at the boundaries.

    The half-width is window // 2; near the edges it shrinks so the window
    stays centered, which keeps anomaly locations free of phase shift. A
    constant input comes back unchanged.
    """
    x = _as_float_array(values)
    if window <= 1 or x.size == 0:
        return x.copy()
    half = window // 2
    idx = np.arange(x.size)
    reach = np.minimum(half, np.minimum(idx, x.size - 1 - idx))
    csum = np.concatenate(([0.0], np.cumsum(x)))
    lo, hi = idx - reach, idx + reach + 1
    return (csum[hi] - csum[lo]) / (hi - lo)


def normality_profile(
    graph: PatternGraph,
    series: TimeSeries | np.ndarray,
    query_length: int,
    smooth: bool = True,
) -> NormalityProfile:
    """Score every length-``query_length`` window of a series against the graph.

    Equivalent to running :func:`time2path` + :func:`path_normality` per
    window, but the series is embedded once and per-window sums come from
    prefix sums over the shared crossing sequence.
    """
    values = series.values if isinstance(series, TimeSeries) else _as_float_array(series)
    l = graph.pattern_length
    if query_length < l:
        raise QueryTooShortError(
            f"query length {query_length} is below the graph's pattern length {l}"
        )
    if values.size < query_length:
        raise InputTooShortError(
            f"series shorter than lq: need at least {query_length} points, got {values.size}"
        )
    n_scores = values.size - query_length + 1
    span = query_length - l  # segments per window
    points = embed_query(graph.embedding, values)
    if span == 0 or points.shape[0] < 2:
        scores = np.zeros(n_scores)
        return NormalityProfile(
            scores=moving_average(scores, l) if smooth else scores,
            query_length=query_length,
            smoothed=smooth,
        )
    seg, members, _ = _trace_crossings(points, graph.nodes, graph.num_angles)
    if members.size < 2:
        scores = np.zeros(n_scores)
    else:
        vals = np.empty(members.size - 1)
        for k in range(members.size - 1):
            vals[k] = graph.step_value(int(members[k]), int(members[k + 1]))
        prefix = np.concatenate(([0.0], np.cumsum(vals)))
        starts = np.arange(n_scores)
        # A step counts for window i when both its crossings lie in segments
        # [i, i + span - 1]; crossings are segment-sorted, so steps per window
        # form a contiguous range.
        k_lo = np.minimum(np.searchsorted(seg, starts, side="left"), prefix.size - 1)
        k_hi = np.searchsorted(seg[1:], starts + span - 1, side="right")
        scores = np.where(k_hi > k_lo, prefix[k_hi] - prefix[k_lo], 0.0)
        scores = scores / query_length
    if smooth:
        scores = moving_average(scores, l)
    return NormalityProfile(scores=scores, query_length=query_length, smoothed=smooth)


def rank_anomalies(profile: NormalityProfile, k: int) -> Ranking:
    """Lowest-normality positions, masking half a query length on both sides.

    Picks the minimum-score position, masks every start within
    query_length / 2 of it (the trivial-match zone), and repeats until k
    positions are found or no unmasked position remains (then ``truncated``).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = profile.scores
    radius = (profile.query_length - 1) // 2
    masked = np.zeros(scores.size, dtype=bool)
    items = []
    while len(items) < k:
        if masked.all():
            return Ranking(items=tuple(items), query_length=profile.query_length, truncated=True)
        candidate = np.where(masked, np.inf, scores)
        pos = int(np.argmin(candidate))
        items.append((pos, float(scores[pos])))
        masked[max(0, pos - radius) : pos + radius + 1] = True
    return Ranking(items=tuple(items), query_length=profile.query_length, truncated=False)


# --- CSV export ---------------------------------------------------------------


def profile_to_csv(profile: NormalityProfile) -> str:
    lines = ["position,normality,anomaly_score"]
    for pos, score in enumerate(profile.scores):
        lines.append(f"{pos},{float(score)!r},{float(-score)!r}")
    return "\n".join(lines) + "\n"


def ranking_to_csv(ranking: Ranking) -> str:
    """Ranking rows carry the anomaly score (negated normality)."""
    lines = ["rank,position,score"]
    for rank, (pos, score) in enumerate(ranking.items, start=1):
        lines.append(f"{rank},{pos},{float(-score)!r}")
    return "\n".join(lines) + "\n"
