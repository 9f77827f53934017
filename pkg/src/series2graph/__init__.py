"""Pattern-graph embedding for unsupervised subsequence anomaly detection.

The pipeline: embed all length-l subsequences of a univariate series into a
2-D shape space, summarize recurrent trajectories as a weighted directed
graph, then rank every query window by how much well-trodden graph structure
its own trajectory follows. Rarely traversed paths are the anomalies, whether
they occur once or many times.
"""

from .core import (
    AnnotationSet,
    SubseqRef,
    TimeSeries,
    is_trivial_match,
    znorm,
    znorm_distance,
)
from .datagen import (
    SrwSpec,
    generate_srw,
    load_annotations,
    load_series,
    save_dataset,
    write_annotations,
    write_series,
)
from .discord import NnProfile, nn_profile, top_discords
from .embedding import (
    ConvolutionParams,
    Pca3Model,
    ShapeEmbedding,
    build_embedding,
    embed_query,
    fit_pca3,
    load_embedding,
    rolling_convolution,
    save_embedding,
)
from .errors import (
    ConstantSequenceError,
    DegenerateBandwidthError,
    DegenerateRankError,
    EmptyProjectionError,
    InputTooShortError,
    ParseError,
    PlacementError,
    QueryTooShortError,
    S2GError,
)
from .evaluate import EvalReport, SweepConfig, run_sweep, top_k_accuracy
from .graph import (
    PatternGraph,
    PatternNode,
    RadiusSet,
    Subgraph,
    build_graph,
    extract_edges,
    extract_nodes,
    graph_to_dot,
    kde_local_maxima,
    load_graph,
    map_point_to_node,
    radius_intersections,
    save_graph,
    scott_bandwidth,
    theta_subgraphs,
)
from .scoring import (
    NodePath,
    NormalityProfile,
    Ranking,
    moving_average,
    normality_profile,
    path_normality,
    rank_anomalies,
    time2path,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet",
    "ConstantSequenceError",
    "ConvolutionParams",
    "DegenerateBandwidthError",
    "DegenerateRankError",
    "EmptyProjectionError",
    "EvalReport",
    "InputTooShortError",
    "NnProfile",
    "NodePath",
    "NormalityProfile",
    "ParseError",
    "PatternGraph",
    "PatternNode",
    "Pca3Model",
    "PlacementError",
    "QueryTooShortError",
    "RadiusSet",
    "Ranking",
    "S2GError",
    "ShapeEmbedding",
    "SrwSpec",
    "Subgraph",
    "SubseqRef",
    "SweepConfig",
    "TimeSeries",
    "build_embedding",
    "build_graph",
    "embed_query",
    "extract_edges",
    "extract_nodes",
    "fit_pca3",
    "generate_srw",
    "graph_to_dot",
    "is_trivial_match",
    "kde_local_maxima",
    "load_annotations",
    "load_embedding",
    "load_graph",
    "load_series",
    "map_point_to_node",
    "moving_average",
    "nn_profile",
    "normality_profile",
    "path_normality",
    "radius_intersections",
    "rank_anomalies",
    "rolling_convolution",
    "run_sweep",
    "save_dataset",
    "save_embedding",
    "save_graph",
    "scott_bandwidth",
    "theta_subgraphs",
    "time2path",
    "top_discords",
    "top_k_accuracy",
    "write_annotations",
    "write_series",
    "znorm",
    "znorm_distance",
]
