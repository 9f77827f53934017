"""Dataset support: synthetic sinusoid-over-random-walk series and file I/O.

The generator produces a fixed-frequency sinusoid riding a Gaussian random
walk, then replaces annotated windows with higher-frequency, random-phase
sinusoids (cross-faded over a few points so the splice has no jumps) and adds
Gaussian noise scaled as a percentage of the base amplitude.

Series files hold one finite decimal per line with optional ``#`` comments;
annotation files hold one ``start,length`` pair per line (0-based, half-open).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .core import AnnotationSet, TimeSeries
from .errors import ParseError, PlacementError

BLEND_POINTS = 5


@dataclass(frozen=True)
class SrwSpec:
    """Parameters of one synthetic dataset.

    The dataset label convention is
    ``SRW-[num_anomalies]-[noise_pct%]-[anomaly_len]``. The sinusoid/walk
    shape parameters are free choices (they go unreported in the naming),
    so they are all overridable here.
    """

    length: int
    num_anomalies: int
    noise_pct: float
    anomaly_len: int
    seed: int = 42
    base_period: int = 200
    base_amplitude: float = 1.0
    walk_step_std: float = 0.01
    anomaly_freq_multiplier: float = 2.0

    def __post_init__(self):
        if self.length < 2 or self.anomaly_len < 2:
            raise ValueError("length and anomaly_len must be >= 2")
        if not 0.0 <= self.noise_pct <= 100.0:
            raise ValueError("noise_pct must be within [0, 100]")
        if self.num_anomalies < 0:
            raise ValueError("num_anomalies must be >= 0")
        if self.num_anomalies * self.anomaly_len > self.length / 2:
            raise ValueError(
                "anomalies do not fit: num_anomalies * anomaly_len must be "
                "at most half the series length"
            )

    @property
    def name(self) -> str:
        noise = f"{self.noise_pct:g}"
        return f"SRW-[{self.num_anomalies}]-[{noise}%]-[{self.anomaly_len}]"


def _place_anomalies(spec: SrwSpec, rng: np.random.Generator) -> list[int]:
    """Uniform non-overlapping starts, pairwise gaps >= anomaly_len."""
    if spec.num_anomalies == 0:
        return []
    margin = spec.anomaly_len
    lo, hi = margin, spec.length - spec.anomaly_len - margin
    if hi < lo:
        raise PlacementError(
            f"series of length {spec.length} cannot hold an anomaly of "
            f"length {spec.anomaly_len} with margin {margin}"
        )
    starts: list[int] = []
    attempts = 0
    max_attempts = 200 * spec.num_anomalies
    while len(starts) < spec.num_anomalies:
        if attempts >= max_attempts:
            raise PlacementError(
                f"placed only {len(starts)}/{spec.num_anomalies} anomalies after "
                f"{max_attempts} draws; spacing >= {spec.anomaly_len} between "
                f"windows of {spec.anomaly_len} points is too tight"
            )
        attempts += 1
        start = int(rng.integers(lo, hi + 1))
        if all(abs(start - s) >= 2 * spec.anomaly_len for s in starts):
            starts.append(start)
    return sorted(starts)


def generate_srw(spec: SrwSpec) -> tuple[TimeSeries, AnnotationSet]:
    """Deterministic synthetic series plus its anomaly annotations.

    Component draws use split seed streams, so e.g. the walk does not change
    when the anomaly count does.
    """
    walk_ss, place_ss, phase_ss, noise_ss = np.random.SeedSequence(spec.seed).spawn(4)
    t = np.arange(spec.length)
    walk = np.cumsum(
        np.random.default_rng(walk_ss).normal(0.0, spec.walk_step_std, spec.length)
    )
    base = spec.base_amplitude * np.sin(2.0 * np.pi * t / spec.base_period)

    starts = _place_anomalies(spec, np.random.default_rng(place_ss))
    phase_rng = np.random.default_rng(phase_ss)
    oscillation = base.copy()
    for start in starts:
        local = np.arange(spec.anomaly_len)
        phase = phase_rng.uniform(0.0, 2.0 * np.pi)
        burst = spec.base_amplitude * np.sin(
            2.0 * np.pi * spec.anomaly_freq_multiplier * local / spec.base_period + phase
        )
        blend = min(BLEND_POINTS, spec.anomaly_len // 2)
        weight = np.ones(spec.anomaly_len)
        if blend > 0:
            ramp = np.linspace(0.0, 1.0, blend + 2)[1:-1]
            weight[:blend] = ramp
            weight[-blend:] = ramp[::-1]
        window = slice(start, start + spec.anomaly_len)
        oscillation[window] = (1.0 - weight) * base[window] + weight * burst

    noise_sigma = (spec.noise_pct / 100.0) * spec.base_amplitude
    noise = (
        np.random.default_rng(noise_ss).normal(0.0, noise_sigma, spec.length)
        if noise_sigma > 0.0
        else 0.0
    )
    values = walk + oscillation + noise
    annotations = AnnotationSet(tuple((s, spec.anomaly_len) for s in starts))
    annotations.check_within(spec.length)
    return TimeSeries(values=values, name=spec.name), annotations


# --- file formats --------------------------------------------------------------


def load_series(path) -> TimeSeries:
    """Parse a one-value-per-line series file, skipping ``#`` comments."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                value = float(line)
            except ValueError:
                raise ParseError(path, lineno, f"not a number: {line!r}") from None
            if not np.isfinite(value):
                raise ParseError(path, lineno, f"value must be finite: {line!r}")
            values.append(value)
    if not values:
        raise ParseError(path, 0, "file holds no values")
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return TimeSeries(values=np.array(values), name=name)


def write_series(series: TimeSeries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for value in series.values:
            fh.write(f"{float(value)!r}\n")


def load_annotations(path) -> AnnotationSet:
    """Parse a start,length-per-line annotation file, skipping ``#`` comments."""
    intervals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError
                intervals.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError(
                    path, lineno, f"expected 'start,length', got {line!r}"
                ) from None
    return AnnotationSet(tuple(intervals))


def write_annotations(annotations: AnnotationSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for start, length in annotations:
            fh.write(f"{start},{length}\n")


def save_dataset(series: TimeSeries, annotations: AnnotationSet, spec: SrwSpec, prefix) -> dict:
    """Write the series, annotations, and a provenance sidecar; returns paths."""
    prefix = str(prefix)
    paths = {
        "series": prefix + ".series",
        "annotations": prefix + ".annot",
        "metadata": prefix + ".meta.json",
    }
    write_series(series, paths["series"])
    write_annotations(annotations, paths["annotations"])
    with open(paths["series"], "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    meta = {"spec": asdict(spec), "name": spec.name, "sha256": digest}
    with open(paths["metadata"], "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
