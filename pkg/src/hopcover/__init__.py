"""Graph precomputation for distance-aware Transformer training.

The pipeline: load an edge list, rename nodes by descending degree, build
a pruned 2-hop cover label index, derive the label-graph hierarchy, sample
fixed-length subgraph tokens per node, fill pairwise hop-distance bias
matrices, and export everything as a binary bundle a trainer can consume
with pure indexing.
"""

from .bias import (
    BIAS_FINITE_MAX,
    BIAS_INF,
    BIAS_MASK,
    CacheStats,
    PairCache,
    build_all_bias,
    build_bias,
    read_bias,
    write_bias,
)
from .dataset import (
    export_bundle,
    load_class_labels,
    load_features,
    make_splits,
    read_features,
    verify_bundle,
    write_features,
)
from .errors import (
    BundleError,
    DataError,
    DistanceOverflowError,
    EdgeListParseError,
    EmptyGraphError,
    FormatError,
    HopcoverError,
    OracleCapError,
)
from .graph import (
    INF,
    OrderedGraph,
    RawGraph,
    bfs_distance_oracle,
    from_edges,
    load_edge_list,
    reorder_by_degree,
)
from .labelgraph import (
    LabelGraph,
    check_property_1,
    check_property_2_corrected,
    check_property_3,
    derive_label_graph,
    format_property_lines,
    report_property_2_literal,
)
from .labels import (
    MAX_STORED_DISTANCE,
    LabelIndex,
    build_pll,
    build_reference_labels,
    query_spd,
    query_spd_counted,
    query_spd_many,
    read_labels,
    write_labels,
)
from .sampler import (
    TOKEN_PAD,
    TOKEN_VIRTUAL,
    SamplerConfig,
    node_stream,
    read_tokens,
    sample_all_tokens,
    sample_token,
    write_tokens,
)

__version__ = "0.1.0"

__all__ = [
    "BIAS_FINITE_MAX",
    "BIAS_INF",
    "BIAS_MASK",
    "BundleError",
    "CacheStats",
    "DataError",
    "DistanceOverflowError",
    "EdgeListParseError",
    "EmptyGraphError",
    "FormatError",
    "HopcoverError",
    "INF",
    "LabelGraph",
    "LabelIndex",
    "MAX_STORED_DISTANCE",
    "OracleCapError",
    "OrderedGraph",
    "PairCache",
    "RawGraph",
    "SamplerConfig",
    "TOKEN_PAD",
    "TOKEN_VIRTUAL",
    "bfs_distance_oracle",
    "build_all_bias",
    "build_bias",
    "build_pll",
    "build_reference_labels",
    "check_property_1",
    "check_property_2_corrected",
    "check_property_3",
    "derive_label_graph",
    "export_bundle",
    "format_property_lines",
    "from_edges",
    "load_class_labels",
    "load_edge_list",
    "load_features",
    "make_splits",
    "node_stream",
    "query_spd",
    "query_spd_counted",
    "query_spd_many",
    "read_bias",
    "read_features",
    "read_labels",
    "read_tokens",
    "reorder_by_degree",
    "report_property_2_literal",
    "sample_all_tokens",
    "sample_token",
    "verify_bundle",
    "write_bias",
    "write_features",
    "write_labels",
    "write_tokens",
]
