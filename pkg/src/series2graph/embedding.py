"""Shape embedding: rolling convolution, 3-component PCA, and rotation.

Every length-``l`` subsequence is summarized by consecutive inclusive sums of
width ``conv_width + 1``, projected onto the top-3 principal directions of all
such rows, and rotated so that the direction spanned by constant subsequences
lands on the first axis. The remaining two coordinates (the ``sproj`` plane)
then encode shape only: adding a constant to a subsequence does not move its
point, and flat subsequences sit exactly at the origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries, _as_float_array
from .errors import ConstantSequenceError, DegenerateRankError, InputTooShortError

# Covariance eigendecomposition is exact and cheap up to this many columns;
# wider rows fall back to the seeded randomized truncated SVD.
EXACT_PCA_MAX_COLS = 512


@dataclass(frozen=True)
class ConvolutionParams:
    """Subsequence length and convolution window for the rolling transform."""

    pattern_length: int
    conv_width: int = 0  # 0 means the default pattern_length // 3

    def __post_init__(self):
        if self.conv_width == 0:
            object.__setattr__(self, "conv_width", self.pattern_length // 3)
        if not 1 <= self.conv_width < self.pattern_length:
            raise ValueError(
                f"conv_width must satisfy 1 <= conv_width < pattern_length, "
                f"got conv_width={self.conv_width}, pattern_length={self.pattern_length}"
            )

    @property
    def row_width(self) -> int:
        """Number of sliding sums per subsequence."""
        return self.pattern_length - self.conv_width


@dataclass(frozen=True)
class Pca3Model:
    """Mean and top-3 orthonormal principal directions of the convolution rows."""

    mean: np.ndarray
    components: np.ndarray  # shape (3, row_width)
    explained_variance_ratio: np.ndarray  # shape (3,), non-increasing

    def __post_init__(self):
        for name in ("mean", "components", "explained_variance_ratio"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class ShapeEmbedding:
    """Fitted transform plus the 2-D projected point per subsequence start."""

    params: ConvolutionParams
    pca: Pca3Model
    rotation: np.ndarray  # 3x3 orthogonal, first row aligned with ref_direction
    ref_direction: np.ndarray  # image of the constant row through the linear map
    sproj: np.ndarray  # shape (|T| - pattern_length + 1, 2)

    def __post_init__(self):
        for name in ("rotation", "ref_direction", "sproj"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


# Row blocks this long are processed at a time, so the overlapping-window
# view never has to materialize as one giant matrix.
_BLOCK_ROWS = 16384


def _convolution_view(values: np.ndarray, params: ConvolutionParams) -> np.ndarray:
    """Zero-copy overlapping view of the sliding sums, one row per window."""
    l, w = params.pattern_length, params.conv_width
    if values.size < l:
        raise InputTooShortError(
            f"series shorter than l: need at least {l} points, got {values.size}"
        )
    csum = np.concatenate(([0.0], np.cumsum(values)))
    sums = csum[w + 1 :] - csum[: values.size - w]  # sums[p] = sum(T[p : p+w+1])
    rows = np.lib.stride_tricks.sliding_window_view(sums, l - w)
    return rows[: values.size - l + 1]


def rolling_convolution(values, params: ConvolutionParams) -> np.ndarray:
    """Sliding inclusive sums for every subsequence, one row per start position.

    Row ``i`` holds ``[sum(T[i:i+w+1]), sum(T[i+1:i+w+2]), ...]`` with
    ``w = conv_width``, ending at the sum whose last term is ``T[i+l-1]``,
    so each row has ``l - w`` entries. The sums are shared between rows via a
    cumulative sum, which keeps the total cost linear in the series length
    for a fixed window.
    """
    return np.ascontiguousarray(_convolution_view(_as_float_array(values), params))


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its largest-magnitude entry is positive."""
    out = components.copy()
    for row in out:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return out


def _randomized_top3(centered: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-3 right singular directions of a centered matrix (Halko sketch)."""
    rng = np.random.default_rng(seed)
    n_cols = centered.shape[1]
    sketch = rng.standard_normal((n_cols, 3 + 8))
    y = centered @ sketch
    for _ in range(2):  # power iterations sharpen the spectrum
        q, _ = np.linalg.qr(y)
        y = centered @ (centered.T @ q)
    q, _ = np.linalg.qr(y)
    b = q.T @ centered
    _, svals, vt = np.linalg.svd(b, full_matrices=False)
    eigvals = (svals[:3] ** 2) / centered.shape[0]
    return vt[:3], eigvals


def _centered_covariance(proj: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Population covariance accumulated over row blocks, in a fixed order."""
    n_cols = proj.shape[1]
    cov = np.zeros((n_cols, n_cols))
    for start in range(0, proj.shape[0], _BLOCK_ROWS):
        block = np.ascontiguousarray(proj[start : start + _BLOCK_ROWS]) - mean
        cov += block.T @ block
    return cov / proj.shape[0]


def fit_pca3(proj: np.ndarray, seed: int = 42) -> Pca3Model:
    """Fit the top-3 principal directions of the convolution rows.

    Deterministic for a fixed seed; component signs are fixed so the
    largest-magnitude entry of each component is positive. Rows with no
    variance at all (rank zero) raise :class:`DegenerateRankError`; rank-1
    or rank-2 inputs return a model whose trailing components carry zero
    explained variance.
    """
    proj = np.asarray(proj, dtype=np.float64)
    if proj.ndim != 2 or proj.shape[0] < 4 or proj.shape[1] < 3:
        raise ValueError(
            f"need a matrix with >= 4 rows and >= 3 columns, got {proj.shape}"
        )
    mean = proj.mean(axis=0)

    if proj.shape[1] <= EXACT_PCA_MAX_COLS:
        cov = _centered_covariance(proj, mean)
        total_var = float(np.trace(cov))
        if total_var == 0.0:
            raise DegenerateRankError(0, "degenerate rank: component 0 has no variance")
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][:3]
        components = eigvecs[:, order].T
        top_vals = eigvals[order]
    else:
        centered = proj - mean
        total_var = float(np.sum(centered * centered)) / proj.shape[0]
        if total_var == 0.0:
            raise DegenerateRankError(0, "degenerate rank: component 0 has no variance")
        components, top_vals = _randomized_top3(centered, seed)

    components = _fix_signs(components)
    evr = np.clip(top_vals, 0.0, None) / total_var
    evr = np.clip(evr, 0.0, 1.0)
    return Pca3Model(mean=mean, components=components, explained_variance_ratio=evr)


def _rotation_onto_first_axis(direction: np.ndarray) -> np.ndarray:
    """Rotation whose rows form an orthonormal basis with ``direction`` first."""
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise DegenerateRankError(0, "reference direction has zero image")
    u = direction / norm
    # Complete to a right-handed basis, seeding Gram-Schmidt with the axis
    # least aligned with u for numerical stability.
    pivot = int(np.argmin(np.abs(u)))
    e = np.zeros(3)
    e[pivot] = 1.0
    b = e - np.dot(e, u) * u
    b /= np.linalg.norm(b)
    c = np.cross(u, b)
    return np.vstack([u, b, c])


def _project_rows(pca: Pca3Model, rotation: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Apply the linear PCA map and rotation, keeping the last two coordinates.

    The map is linear (no mean shift) so that constant rows land exactly on
    the first rotated axis, i.e. at the sproj origin. Rows are consumed in
    blocks so an overlapping-window view never materializes whole.
    """
    plane = (rotation[1:] @ pca.components).T  # combined map to (r_y, r_z)
    out = np.empty((rows.shape[0], 2))
    for start in range(0, rows.shape[0], _BLOCK_ROWS):
        block = np.ascontiguousarray(rows[start : start + _BLOCK_ROWS])
        out[start : start + _BLOCK_ROWS] = block @ plane
    return out


def build_embedding(
    series: TimeSeries | np.ndarray, params: ConvolutionParams, seed: int = 42
) -> ShapeEmbedding:
    """Fit the full shape transform on a series and project all its subsequences."""
    values = series.values if isinstance(series, TimeSeries) else _as_float_array(series)
    span = float(np.max(values) - np.min(values))
    if span == 0.0:
        raise ConstantSequenceError("cannot embed a constant series")
    rows = _convolution_view(values, params)
    if rows.shape[0] < 4:
        raise InputTooShortError(
            f"series shorter than l + 3: need at least {params.pattern_length + 3} "
            f"points to fit, got {values.size}"
        )
    pca = fit_pca3(rows, seed)
    ones = np.ones(params.row_width)
    ref_direction = pca.components @ (span * params.conv_width * ones)
    rotation = _rotation_onto_first_axis(ref_direction)
    sproj = _project_rows(pca, rotation, rows)
    return ShapeEmbedding(
        params=params,
        pca=pca,
        rotation=rotation,
        ref_direction=ref_direction,
        sproj=sproj,
    )


def embed_query(emb: ShapeEmbedding, query) -> np.ndarray:
    """Project a query sequence with an already-fitted transform (no refit)."""
    rows = _convolution_view(_as_float_array(query), emb.params)
    return _project_rows(emb.pca, emb.rotation, rows)


# --- serialization ---------------------------------------------------------
#
# Plain JSON numbers round-trip float64 exactly (repr is shortest-exact), so
# the document stays both lossless and diffable.

EMBEDDING_FORMAT = "s2g-embedding"
EMBEDDING_VERSION = 1


def embedding_to_dict(emb: ShapeEmbedding) -> dict:
    return {
        "format": EMBEDDING_FORMAT,
        "version": EMBEDDING_VERSION,
        "params": {
            "pattern_length": emb.params.pattern_length,
            "conv_width": emb.params.conv_width,
        },
        "mean": emb.pca.mean.tolist(),
        "components": emb.pca.components.tolist(),
        "explained_variance_ratio": emb.pca.explained_variance_ratio.tolist(),
        "rotation": emb.rotation.tolist(),
        "ref_direction": emb.ref_direction.tolist(),
        "sproj": emb.sproj.tolist(),
    }


def embedding_from_dict(doc: dict) -> ShapeEmbedding:
    if doc.get("format") != EMBEDDING_FORMAT or doc.get("version") != EMBEDDING_VERSION:
        raise ValueError("not a recognized embedding document")
    params = ConvolutionParams(
        pattern_length=int(doc["params"]["pattern_length"]),
        conv_width=int(doc["params"]["conv_width"]),
    )
    pca = Pca3Model(
        mean=np.array(doc["mean"], dtype=np.float64),
        components=np.array(doc["components"], dtype=np.float64),
        explained_variance_ratio=np.array(
            doc["explained_variance_ratio"], dtype=np.float64
        ),
    )
    return ShapeEmbedding(
        params=params,
        pca=pca,
        rotation=np.array(doc["rotation"], dtype=np.float64),
        ref_direction=np.array(doc["ref_direction"], dtype=np.float64),
        sproj=np.array(doc["sproj"], dtype=np.float64),
    )


def save_embedding(emb: ShapeEmbedding, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(embedding_to_dict(emb), fh)


def load_embedding(path) -> ShapeEmbedding:
    with open(path, encoding="utf-8") as fh:
        return embedding_from_dict(json.load(fh))
