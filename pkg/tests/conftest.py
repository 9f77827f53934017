import numpy as np
import pytest

from series2graph import SrwSpec, generate_srw


@pytest.fixture(scope="session")
def small_srw():
    """8K-point dataset with 4 anomalies, shared by read-only tests."""
    spec = SrwSpec(length=8_000, num_anomalies=4, noise_pct=0.0, anomaly_len=200, seed=7)
    series, annotations = generate_srw(spec)
    return spec, series, annotations


@pytest.fixture(scope="session")
def clean_srw():
    """Anomaly-free periodic series (sinusoid over a gentle walk)."""
    spec = SrwSpec(length=12_000, num_anomalies=0, noise_pct=0.0, anomaly_len=200, seed=3)
    series, _ = generate_srw(spec)
    return series


def naive_convolution(values, pattern_length, conv_width):
    """Independent O(n * l * w) re-summation oracle for the rolling transform."""
    values = np.asarray(values, dtype=float)
    n_rows = values.size - pattern_length + 1
    n_cols = pattern_length - conv_width
    out = np.empty((n_rows, n_cols))
    for i in range(n_rows):
        for j in range(n_cols):
            out[i, j] = np.sum(values[i + j : i + j + conv_width + 1])
    return out


def naive_znorm_distance(a, b):
    """Independent z-normalized distance used for bitwise oracle checks."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    za = (a - np.mean(a)) / np.std(a)
    zb = (b - np.mean(b)) / np.std(b)
    return float(np.sqrt(np.sum((za - zb) ** 2)))


def naive_nn_profile(values, pattern_length, order):
    """Independent double-loop oracle, including trivial-match exclusion.

    Window z-scores are precomputed once (the expression is deterministic, so
    this is bit-identical to redoing it per pair); every pairwise distance
    still comes from an explicit double loop.
    """
    values = np.asarray(values, dtype=float)
    n = values.size - pattern_length + 1
    zscores = []
    for i in range(n):
        window = values[i : i + pattern_length]
        sigma = np.std(window)
        zscores.append(None if sigma == 0.0 else (window - np.mean(window)) / sigma)
    out = np.full(n, np.inf)
    for i in range(n):
        if zscores[i] is None:
            continue
        dists = []
        for j in range(n):
            if abs(i - j) < pattern_length / 2 or zscores[j] is None:
                continue
            dists.append(float(np.sqrt(np.sum((zscores[i] - zscores[j]) ** 2))))
        dists.sort()
        if len(dists) >= order:
            out[i] = dists[order - 1]
    finite = out[np.isfinite(out)]
    out[~np.isfinite(out)] = finite.max() if finite.size else 0.0
    return out


def duplicated_anomaly_series(seed=12, n=3000, period=50, anomaly_len=50, starts=(800, 2000)):
    """Noisy sine with two bit-identical high-frequency bursts pasted in."""
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    values = np.sin(2 * np.pi * t / period) + rng.normal(0, 0.05, n)
    burst = np.sin(2 * np.pi * 2 * np.arange(anomaly_len) / period + 0.9)
    burst = burst + rng.normal(0, 0.05, anomaly_len)
    for start in starts:
        values[start : start + anomaly_len] = burst
    return values, starts
