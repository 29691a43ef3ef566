"""Structural-entropy vector quantization.

Feature frames become a cosine-similarity graph; greedy structural
entropy minimization discovers the codebook size and the codewords;
residual stages refine the reconstruction; queries are tokenized by the
entropy change of joining a cluster.  See the README for the pipeline.
"""

from .baselines import (
    ExactResult,
    RvqBaseline,
    brute_force_min_se,
    euclidean_rvq,
    kmeans,
)
from .codebook import (
    Codebook,
    extract_centroids,
    fold_isolated,
    hierarchical_minimize,
    vanilla_greedy,
)
from .entropy import (
    EncodingTree,
    Partition,
    SEDelta,
    assign_delta,
    encoding_tree_se,
    eq4_closed_form,
    merge_delta,
    one_dim_entropy,
    partition_se,
    singleton_attach_se,
)
from .errors import (
    ConfigError,
    DataError,
    InternalError,
    ModelFormatError,
    SevqError,
)
from .feature_io import (
    load_features,
    load_model,
    load_tokens,
    save_features,
    save_model,
    save_tokens,
)
from .graph import (
    FeatureGraph,
    QueryAttachment,
    attach_query,
    build_graph,
    induced_subgraph,
)
from .quantizer import (
    CodecModel,
    StageModel,
    TokenSequence,
    TrainConfig,
    assign,
    decode,
    distortion_report,
    encode,
    stage_reconstructions,
    train_codec,
)
from .vclub import VariationalModel, disentangle, fit_pair, vclub_estimate

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "CodecModel",
    "ConfigError",
    "DataError",
    "EncodingTree",
    "ExactResult",
    "FeatureGraph",
    "InternalError",
    "ModelFormatError",
    "Partition",
    "QueryAttachment",
    "RvqBaseline",
    "SEDelta",
    "SevqError",
    "StageModel",
    "TokenSequence",
    "TrainConfig",
    "VariationalModel",
    "assign",
    "assign_delta",
    "attach_query",
    "brute_force_min_se",
    "build_graph",
    "decode",
    "disentangle",
    "distortion_report",
    "encode",
    "encoding_tree_se",
    "eq4_closed_form",
    "euclidean_rvq",
    "extract_centroids",
    "fit_pair",
    "fold_isolated",
    "hierarchical_minimize",
    "induced_subgraph",
    "kmeans",
    "load_features",
    "load_model",
    "load_tokens",
    "merge_delta",
    "one_dim_entropy",
    "partition_se",
    "save_features",
    "save_model",
    "save_tokens",
    "singleton_attach_se",
    "stage_reconstructions",
    "train_codec",
    "vanilla_greedy",
    "vclub_estimate",
]
