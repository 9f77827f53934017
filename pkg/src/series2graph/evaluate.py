"""Top-k accuracy metric and parameter-sweep experiments.

A prediction hits when its window overlaps any annotated interval; each
annotation can be claimed once, greedily in rank order, and the same rule is
applied to every method under comparison.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .core import AnnotationSet, TimeSeries
from .errors import S2GError
from .graph import build_graph
from .scoring import normality_profile, rank_anomalies

REPORT_SCHEMA = "s2g-report/1"


@dataclass(frozen=True)
class EvalReport:
    """Outcome of scoring one method on one dataset at one parameter point."""

    dataset: str
    method: str
    k: int
    hits: int
    accuracy: float
    predictions: tuple  # ((position, matched interval or None), ...)
    wall_time_ms: float
    params: dict = field(default_factory=dict)
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "dataset": self.dataset,
            "method": self.method,
            "k": self.k,
            "hits": self.hits,
            "accuracy": self.accuracy,
            "predictions": [
                {"position": pos, "matched": list(match) if match else None}
                for pos, match in self.predictions
            ],
            "wall_time_ms": self.wall_time_ms,
            "params": self.params,
            "error": self.error,
        }


def top_k_accuracy(
    predictions,
    annotations: AnnotationSet,
    k: int,
    query_length: int,
    dataset: str = "",
    method: str = "",
    wall_time_ms: float = 0.0,
    params: dict | None = None,
) -> EvalReport:
    """Fraction of the k predictions whose window overlaps an unclaimed annotation.

    ``predictions`` are start positions in rank order, at most k of them; a
    prediction's window is [p, p + query_length).
    """
    predictions = list(predictions)
    if len(predictions) > k:
        raise ValueError(f"got {len(predictions)} predictions for k={k}")
    claimed: set[int] = set()
    outcome = []
    hits = 0
    for pos in predictions:
        match = None
        for idx in annotations.overlapping(int(pos), query_length):
            if idx not in claimed:
                claimed.add(idx)
                match = annotations.intervals[idx]
                hits += 1
                break
        outcome.append((int(pos), match))
    return EvalReport(
        dataset=dataset,
        method=method,
        k=k,
        hits=hits,
        accuracy=hits / k,
        predictions=tuple(outcome),
        wall_time_ms=wall_time_ms,
        params=dict(params or {}),
    )


# --- sweeps ---------------------------------------------------------------------

SWEEP_AXES = ("pattern_length", "bandwidth_ratio", "prefix_fraction", "query_length")


@dataclass(frozen=True)
class SweepConfig:
    """One swept axis over a fixed base configuration.

    ``axis`` is one of ``pattern_length``, ``bandwidth_ratio``,
    ``prefix_fraction``, ``query_length``. For the bandwidth axis the string
    value ``"scott"`` selects the default rule.
    """

    axis: str
    values: tuple
    pattern_length: int
    query_length: int
    k: int
    num_angles: int = 50
    seed: int = 42
    conv_width: int = 0

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        object.__setattr__(self, "values", tuple(self.values))


def _run_point(series: TimeSeries, annotations: AnnotationSet, config: SweepConfig, value):
    pattern_length = config.pattern_length
    query_length = config.query_length
    bandwidth_ratio = None
    train = series.values
    if config.axis == "pattern_length":
        # the query scales with the pattern so their base ratio is preserved
        pattern_length = int(value)
        ratio = config.query_length / config.pattern_length
        query_length = max(int(round(ratio * pattern_length)), pattern_length)
    elif config.axis == "query_length":
        query_length = int(value)
    elif config.axis == "bandwidth_ratio":
        bandwidth_ratio = None if value == "scott" else float(value)
    elif config.axis == "prefix_fraction":
        train = series.values[: max(2 * pattern_length, int(len(series) * float(value)))]

    started = time.perf_counter()
    graph = build_graph(
        train,
        pattern_length=pattern_length,
        num_angles=config.num_angles,
        seed=config.seed,
        conv_width=config.conv_width,
        bandwidth_ratio=bandwidth_ratio,
    )
    profile = normality_profile(graph, series, query_length)
    ranking = rank_anomalies(profile, config.k)
    elapsed_ms = (time.perf_counter() - started) * 1e3
    return top_k_accuracy(
        ranking.positions(),
        annotations,
        config.k,
        query_length,
        dataset=series.name,
        method="series2graph",
        wall_time_ms=elapsed_ms,
        params={
            "axis": config.axis,
            "value": value,
            "l": pattern_length,
            "lq": query_length,
            "r": config.num_angles,
            "seed": config.seed,
        },
    )


def run_sweep(series: TimeSeries, annotations: AnnotationSet, config: SweepConfig) -> list:
    """One report per grid value; a failing point is recorded, not fatal."""
    reports = []
    for value in config.values:
        try:
            reports.append(_run_point(series, annotations, config, value))
        except (S2GError, ValueError) as exc:
            reports.append(
                EvalReport(
                    dataset=series.name,
                    method="series2graph",
                    k=config.k,
                    hits=0,
                    accuracy=0.0,
                    predictions=(),
                    wall_time_ms=0.0,
                    params={"axis": config.axis, "value": value},
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return reports


def reports_to_jsonl(reports) -> str:
    return "".join(json.dumps(r.to_json_dict(), sort_keys=True) + "\n" for r in reports)


def reports_to_csv(reports) -> str:
    lines = ["dataset,method,axis,value,k,hits,accuracy,wall_time_ms,error"]
    for r in reports:
        axis = r.params.get("axis", "")
        value = r.params.get("value", "")
        err = r.error or ""
        lines.append(
            f"{r.dataset},{r.method},{axis},{value},{r.k},{r.hits},"
            f"{r.accuracy!r},{r.wall_time_ms:.3f},{err}"
        )
    return "\n".join(lines) + "\n"
