"""Pattern graph construction from the 2-D shape projection.

Nodes are density maxima of the radii at which the projected trajectory
crosses each of ``num_angles`` rays fanned around the origin; edges count
consecutive crossings, so edge weights measure how often one recurrent shape
follows another in the training series.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import TimeSeries, _as_float_array
from .embedding import (
    ConvolutionParams,
    ShapeEmbedding,
    build_embedding,
    embedding_from_dict,
    embedding_to_dict,
)
from .errors import DegenerateBandwidthError, EmptyProjectionError

DEFAULT_NUM_ANGLES = 50
KDE_GRID_SIZE = 512


@dataclass(frozen=True)
class RadiusSet:
    """Crossing distances of the trajectory with one origin ray, in order."""

    angle: float
    radii: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.radii, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "radii", arr)

    def __len__(self) -> int:
        return int(self.radii.size)


@dataclass(frozen=True)
class PatternNode:
    """One recurrent-shape cluster: a density maximum on one angle bucket."""

    id: int
    psi_index: int
    radius: float


@dataclass
class PatternGraph:
    """Directed weighted graph of shape transitions, plus its embedding."""

    nodes: list
    edges: dict  # (src_id, dst_id) -> positive integer weight
    node_sequence: np.ndarray  # node ids traversed by the training series
    embedding: ShapeEmbedding
    num_angles: int
    seed: int
    self_loops: bool = False
    crossing_segments: np.ndarray = field(default=None, repr=False)
    crossing_nodes: np.ndarray = field(default=None, repr=False)
    _degrees: np.ndarray = field(default=None, repr=False)

    @property
    def pattern_length(self) -> int:
        return self.embedding.params.pattern_length

    def degrees(self) -> np.ndarray:
        """Node degree table: distinct incident (src, dst) pairs, weight-blind."""
        if self._degrees is None:
            deg = np.zeros(len(self.nodes), dtype=np.int64)
            for src, dst in self.edges:
                deg[src] += 1
                if dst != src:
                    deg[dst] += 1
            self._degrees = deg
        return self._degrees

    def step_value(self, src: int, dst: int) -> float:
        """Contribution w(src, dst) * (deg(src) - 1); 0 for edges not in the graph."""
        weight = self.edges.get((src, dst), 0)
        if weight == 0:
            return 0.0
        return float(weight * (self.degrees()[src] - 1))


# --- segment-ray geometry ---------------------------------------------------


def _ray_crossings(points: np.ndarray, angle: float):
    """Crossings of every consecutive-point segment with one origin ray.

    Returns (segment_index, t, radius) arrays in traversal order. A crossing
    is counted with parameter t in [0, 1) along its segment, so a shared
    endpoint sitting exactly on the ray belongs to the outgoing segment only.
    Only the positive half-line counts, and only radii > 0 are kept.
    """
    ux, uy = math.cos(angle), math.sin(angle)
    x, y = points[:, 0], points[:, 1]
    cross = ux * y - uy * x  # signed side of the ray line per point
    c_a, c_b = cross[:-1], cross[1:]
    mask = ((c_a == 0.0) & (c_b != 0.0)) | ((c_a > 0.0) & (c_b < 0.0)) | (
        (c_a < 0.0) & (c_b > 0.0)
    )
    seg = np.nonzero(mask)[0]
    t = c_a[seg] / (c_a[seg] - c_b[seg])
    px = x[seg] + t * (x[seg + 1] - x[seg])
    py = y[seg] + t * (y[seg + 1] - y[seg])
    radius = ux * px + uy * py
    keep = radius > 0.0
    seg, t, radius = seg[keep], t[keep], radius[keep]

    # Segments lying exactly along the ray line contribute one radius: the
    # first endpoint's when it is on the positive side, else the second's.
    both_zero = np.nonzero((c_a == 0.0) & (c_b == 0.0))[0]
    if both_zero.size:
        extra_seg, extra_t, extra_r = [], [], []
        for i in both_zero:
            for s_val, t_val in ((ux * x[i] + uy * y[i], 0.0), (ux * x[i + 1] + uy * y[i + 1], 1.0 - 1e-12)):
                if s_val > 0.0:
                    extra_seg.append(i)
                    extra_t.append(t_val)
                    extra_r.append(s_val)
                    break
        if extra_seg:
            seg = np.concatenate([seg, np.array(extra_seg, dtype=seg.dtype)])
            t = np.concatenate([t, np.array(extra_t)])
            radius = np.concatenate([radius, np.array(extra_r)])
            order = np.lexsort((t, seg))
            seg, t, radius = seg[order], t[order], radius[order]
    return seg, t, radius


def radius_intersections(sproj: np.ndarray, angle: float) -> RadiusSet:
    """Radius set of one ray: crossing distances from the origin, in order."""
    points = np.asarray(sproj, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < 2:
        raise ValueError("sproj must be an (n >= 2) x 2 point sequence")
    _, _, radius = _ray_crossings(points, angle)
    return RadiusSet(angle=angle, radii=radius)


def _all_crossings(points: np.ndarray, num_angles: int):
    """Crossings with every grid ray, sorted by (segment, t, ray index)."""
    segs, ts, rays, radii = [], [], [], []
    for k in range(num_angles):
        seg, t, radius = _ray_crossings(points, 2.0 * math.pi * k / num_angles)
        segs.append(seg)
        ts.append(t)
        rays.append(np.full(seg.shape, k, dtype=np.int64))
        radii.append(radius)
    seg = np.concatenate(segs)
    t = np.concatenate(ts)
    ray = np.concatenate(rays)
    radius = np.concatenate(radii)
    order = np.lexsort((ray, t, seg))
    return seg[order], ray[order], radius[order]


# --- node extraction ---------------------------------------------------------


def _spread_is_degenerate(arr: np.ndarray) -> bool:
    """Spread at or below float-noise scale relative to the radii themselves."""
    sigma = float(np.std(arr))
    return sigma <= 1e-9 * float(np.mean(np.abs(arr)))


def scott_bandwidth(radii) -> float:
    """KDE bandwidth sigma * n^(-1/5) for one radius set."""
    arr = radii.radii if isinstance(radii, RadiusSet) else _as_float_array(radii)
    if arr.size < 2:
        raise DegenerateBandwidthError(f"need at least 2 radii, got {arr.size}")
    if _spread_is_degenerate(arr):
        raise DegenerateBandwidthError("radius set has zero spread")
    return float(np.std(arr)) * arr.size ** (-1.0 / 5.0)


def kde_local_maxima(radii, bandwidth: float, grid_size: int = KDE_GRID_SIZE) -> np.ndarray:
    """Locations of the strict local maxima of a Gaussian KDE over the radii.

    The density is evaluated on a uniform grid spanning
    [min - 3h, max + 3h]; at least one location is always returned.
    """
    arr = radii.radii if isinstance(radii, RadiusSet) else _as_float_array(radii)
    if arr.size == 0:
        raise ValueError("need at least one radius")
    if float(np.ptp(arr)) == 0.0:
        return np.array([arr[0]])
    grid = np.linspace(arr.min() - 3.0 * bandwidth, arr.max() + 3.0 * bandwidth, grid_size)
    z = (grid[:, None] - arr[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (arr.size * bandwidth * math.sqrt(2.0 * math.pi))
    interior = (density[1:-1] > density[:-2]) & (density[1:-1] > density[2:])
    maxima = grid[1:-1][interior]
    if maxima.size == 0:
        maxima = grid[np.argmax(density), None]
    maxima = maxima[maxima > 0.0]
    if maxima.size == 0:
        return np.array([float(np.mean(arr))])
    return maxima


def _nodes_from_bucket_radii(
    bucket_radii: dict, num_angles: int, bandwidth_ratio: float | None = None
) -> list:
    """One node per density maximum per bucket; degenerate buckets get the mean.

    ``bandwidth_ratio`` replaces Scott's n^(-1/5) factor with a fixed multiple
    of the bucket's radius spread.
    """
    nodes = []
    next_id = 0
    for k in range(num_angles):
        radii = bucket_radii.get(k)
        if radii is None or radii.size == 0:
            continue
        try:
            if bandwidth_ratio is None:
                bandwidth = scott_bandwidth(radii)
            else:
                if radii.size < 2 or _spread_is_degenerate(radii):
                    raise DegenerateBandwidthError("degenerate radius set")
                bandwidth = bandwidth_ratio * float(np.std(radii))
            positions = kde_local_maxima(radii, bandwidth)
        except DegenerateBandwidthError:
            positions = np.array([float(np.mean(radii))])
        for pos in np.sort(positions):
            nodes.append(PatternNode(id=next_id, psi_index=k, radius=float(pos)))
            next_id += 1
    if not nodes:
        raise EmptyProjectionError("no ray is crossed at a positive radius")
    return nodes


def extract_nodes(sproj: np.ndarray, num_angles: int = DEFAULT_NUM_ANGLES) -> list:
    """One node per KDE density maximum per angle bucket.

    Node ids run in (psi_index, radius) lexicographic order. Buckets whose
    radius set is degenerate (fewer than two crossings, or zero spread) get
    a single node at the mean radius so every traversed bucket stays
    representable.
    """
    if num_angles < 3:
        raise ValueError("need at least 3 angles")
    points = np.asarray(sproj, dtype=np.float64)
    if points.shape[0] < 2:
        raise ValueError("need at least 2 projected points")
    _, ray, radius = _all_crossings(points, num_angles)
    bucket_radii = {k: radius[ray == k] for k in range(num_angles)}
    return _nodes_from_bucket_radii(bucket_radii, num_angles)


# --- membership and edges ----------------------------------------------------


def _bucket_arrays(nodes: list) -> dict:
    """Per-angle (radii, node ids) arrays sorted by radius.

    With ids assigned in (psi_index, radius) order, the radius sort keeps ids
    ascending too, so midpoint ties resolved toward the lower radius also
    land on the lower id.
    """
    grouped = {}
    for node in nodes:
        grouped.setdefault(node.psi_index, []).append(node)
    buckets = {}
    for k, group in grouped.items():
        group.sort(key=lambda n: (n.radius, n.id))
        buckets[k] = (
            np.array([n.radius for n in group]),
            np.array([n.id for n in group]),
        )
    return buckets


def _scalar_pick(bucket, scalar: float):
    """Node of one bucket minimizing |scalar - radius|; ties go to the lower id."""
    radii, ids = bucket
    pos = int(np.searchsorted(radii, scalar))
    if pos == 0:
        return int(ids[0])
    if pos == radii.size:
        return int(ids[-1])
    below, above = radii[pos - 1], radii[pos]
    if scalar - below <= above - scalar:
        return int(ids[pos - 1])
    return int(ids[pos])


def map_point_to_node(nodes: list, num_angles: int, point) -> int:
    """Closest node to a 2-D point: nearest angle bucket, then nearest radius.

    The bucket is the one minimizing the absolute angle to the point (ties
    toward the lower index); within it, the node minimizing
    |<point, u_psi> - radius|. An empty bucket falls back to the global
    minimum of that same scalar criterion over all nodes.
    """
    x, y = float(point[0]), float(point[1])
    theta = math.atan2(y, x) % (2.0 * math.pi)
    step = 2.0 * math.pi / num_angles
    lo = min(int(math.floor(theta / step)), num_angles - 1)
    hi = (lo + 1) % num_angles
    d_lo = theta - step * lo
    d_hi = step * (lo + 1) - theta
    if d_lo < d_hi:
        bucket_idx = lo
    elif d_hi < d_lo:
        bucket_idx = hi
    else:
        # Exactly midway goes to the lower index, including across the wrap.
        bucket_idx = min(lo, hi)

    buckets = _bucket_arrays(nodes)
    if bucket_idx in buckets:
        scalar = x * math.cos(step * bucket_idx) + y * math.sin(step * bucket_idx)
        return _scalar_pick(buckets[bucket_idx], scalar)
    return _global_scalar_pick(buckets, step, x, y)


def _global_scalar_pick(buckets: dict, step: float, x: float, y: float) -> int:
    best_id, best_err = -1, math.inf
    for k in sorted(buckets):
        scalar = x * math.cos(step * k) + y * math.sin(step * k)
        radii, ids = buckets[k]
        errs = np.abs(scalar - radii)
        j = int(np.argmin(errs))
        if errs[j] < best_err:
            best_err, best_id = float(errs[j]), int(ids[j])
    return best_id


def _memberships(buckets: dict, ray: np.ndarray, radius: np.ndarray, step: float) -> tuple[np.ndarray, bool]:
    """Node id per crossing; True in the second slot when a fallback was used."""
    out = np.empty(ray.size, dtype=np.int64)
    used_fallback = False
    for k in np.unique(ray):
        sel = ray == k
        bucket = buckets.get(int(k))
        if bucket is None:
            # The graph never saw this ray: fall back to the global criterion,
            # evaluated at the crossing point radius * u_psi itself.
            used_fallback = True
            ang = step * k
            for idx in np.nonzero(sel)[0]:
                x, y = radius[idx] * math.cos(ang), radius[idx] * math.sin(ang)
                out[idx] = _global_scalar_pick(buckets, step, float(x), float(y))
            continue
        radii, ids = bucket
        pos = np.searchsorted(radii, radius[sel])
        pos_hi = np.clip(pos, 0, radii.size - 1)
        pos_lo = np.clip(pos - 1, 0, radii.size - 1)
        err_lo = np.abs(radius[sel] - radii[pos_lo])
        err_hi = np.abs(radius[sel] - radii[pos_hi])
        out[sel] = np.where(err_lo <= err_hi, ids[pos_lo], ids[pos_hi])
    return out, used_fallback


def _collapse_runs(sequence: np.ndarray) -> np.ndarray:
    if sequence.size == 0:
        return sequence
    keep = np.concatenate(([True], sequence[1:] != sequence[:-1]))
    return sequence[keep]


def _edges_from_sequence(sequence: np.ndarray) -> dict:
    if sequence.size < 2:
        return {}
    pairs = np.stack([sequence[:-1], sequence[1:]], axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    return {(int(s), int(d)): int(c) for (s, d), c in zip(uniq, counts)}


def _trace_crossings(points: np.ndarray, nodes: list, num_angles: int):
    """Crossing segments, node memberships, and fallback flag for a trajectory."""
    seg, ray, radius = _all_crossings(points, num_angles)
    buckets = _bucket_arrays(nodes)
    step = 2.0 * math.pi / num_angles
    members, used_fallback = _memberships(buckets, ray, radius, step)
    return seg, members, used_fallback


def extract_edges(
    sproj: np.ndarray,
    nodes: list,
    num_angles: int = DEFAULT_NUM_ANGLES,
    self_loops: bool = False,
):
    """Walk the trajectory and count node-to-node transitions.

    Each ray crossing is mapped to a node of its angle bucket; the resulting
    node sequence (consecutive duplicates collapsed unless ``self_loops``)
    yields the edge multiset, so the weights sum to len(sequence) - 1.
    """
    if not nodes:
        raise ValueError("need a non-empty node set")
    points = np.asarray(sproj, dtype=np.float64)
    _, members, _ = _trace_crossings(points, nodes, num_angles)
    sequence = members if self_loops else _collapse_runs(members)
    return sequence, _edges_from_sequence(sequence)


def build_graph(
    series: TimeSeries | np.ndarray,
    pattern_length: int,
    num_angles: int = DEFAULT_NUM_ANGLES,
    seed: int = 42,
    conv_width: int = 0,
    self_loops: bool = False,
    bandwidth_ratio: float | None = None,
) -> PatternGraph:
    """Embed a series and build its pattern graph.

    ``bandwidth_ratio`` overrides the default Scott factor: when given, each
    bucket uses h = bandwidth_ratio * sigma(radii) instead of Scott's rule.
    """
    params = ConvolutionParams(pattern_length=pattern_length, conv_width=conv_width)
    emb = build_embedding(series, params, seed)
    points = emb.sproj
    seg, ray, radius = _all_crossings(points, num_angles)
    bucket_radii = {k: radius[ray == k] for k in range(num_angles)}
    nodes = _nodes_from_bucket_radii(bucket_radii, num_angles, bandwidth_ratio)
    members, _ = _memberships(
        _bucket_arrays(nodes), ray, radius, 2.0 * math.pi / num_angles
    )
    sequence = members if self_loops else _collapse_runs(members)
    edges = _edges_from_sequence(sequence)
    return PatternGraph(
        nodes=nodes,
        edges=edges,
        node_sequence=sequence,
        embedding=emb,
        num_angles=num_angles,
        seed=seed,
        self_loops=self_loops,
        crossing_segments=seg,
        crossing_nodes=members,
    )


# --- normality / anomaly subgraphs ------------------------------------------


@dataclass(frozen=True)
class Subgraph:
    node_ids: frozenset
    edges: dict


def theta_subgraphs(graph: PatternGraph, theta: int):
    """Split the edges into the theta-normality set and its complement.

    An edge survives into the normality subgraph when
    weight * (deg(src) - 1) >= theta; degrees always refer to the full graph.
    """
    if theta < 1:
        raise ValueError("theta must be >= 1")
    deg = graph.degrees()
    normal, anomal = {}, {}
    for (src, dst), weight in graph.edges.items():
        if weight * (deg[src] - 1) >= theta:
            normal[(src, dst)] = weight
        else:
            anomal[(src, dst)] = weight
    return (
        Subgraph(frozenset(n for e in normal for n in e), normal),
        Subgraph(frozenset(n for e in anomal for n in e), anomal),
    )


# --- persistence -------------------------------------------------------------

GRAPH_FORMAT = "s2g-graph"
GRAPH_VERSION = 1


def graph_to_dict(graph: PatternGraph) -> dict:
    edges = sorted((src, dst, w) for (src, dst), w in graph.edges.items())
    return {
        "format": GRAPH_FORMAT,
        "version": GRAPH_VERSION,
        "meta": {
            "l": graph.embedding.params.pattern_length,
            "lambda": graph.embedding.params.conv_width,
            "r": graph.num_angles,
            "seed": graph.seed,
            "self_loops": graph.self_loops,
        },
        "nodes": [
            {"id": n.id, "psi_index": n.psi_index, "radius": n.radius}
            for n in sorted(graph.nodes, key=lambda n: n.id)
        ],
        "edges": [{"src": s, "dst": d, "weight": w} for s, d, w in edges],
        "node_sequence": graph.node_sequence.tolist(),
        "crossing_segments": graph.crossing_segments.tolist(),
        "crossing_nodes": graph.crossing_nodes.tolist(),
        "embedding": embedding_to_dict(graph.embedding),
    }


def graph_from_dict(doc: dict) -> PatternGraph:
    if doc.get("format") != GRAPH_FORMAT or doc.get("version") != GRAPH_VERSION:
        raise ValueError("not a recognized graph document")
    nodes = [
        PatternNode(id=int(n["id"]), psi_index=int(n["psi_index"]), radius=float(n["radius"]))
        for n in doc["nodes"]
    ]
    edges = {(int(e["src"]), int(e["dst"])): int(e["weight"]) for e in doc["edges"]}
    return PatternGraph(
        nodes=nodes,
        edges=edges,
        node_sequence=np.array(doc["node_sequence"], dtype=np.int64),
        embedding=embedding_from_dict(doc["embedding"]),
        num_angles=int(doc["meta"]["r"]),
        seed=int(doc["meta"]["seed"]),
        self_loops=bool(doc["meta"]["self_loops"]),
        crossing_segments=np.array(doc["crossing_segments"], dtype=np.int64),
        crossing_nodes=np.array(doc["crossing_nodes"], dtype=np.int64),
    )


def save_graph(graph: PatternGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh)


def load_graph(path) -> PatternGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


def graph_to_dot(graph: PatternGraph) -> str:
    """Deterministic DOT rendering; pen width grows with log edge weight."""
    lines = ["digraph pattern_graph {"]
    for node in sorted(graph.nodes, key=lambda n: n.id):
        lines.append(f'  n{node.id} [label="psi{node.psi_index}_r{node.radius:.4f}"];')
    if graph.edges:
        w_max = max(graph.edges.values())
        for (src, dst), weight in sorted(graph.edges.items()):
            pen = 1.0 + 4.0 * math.log1p(weight) / math.log1p(w_max)
            lines.append(
                f"  n{src} -> n{dst} [weight={weight}, penwidth={pen:.3f}];"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"
