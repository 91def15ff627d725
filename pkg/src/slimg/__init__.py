"""Sparse linear graph learning toolkit.

Builds multi-view propagated node features on a graph, classifies with
group-sparse logistic regression, and benchmarks against linearized
graph baselines on synthetic sanity checks and citation networks.
"""

from .baselines import BaselineSpec, CapacityError, propagate
from .classifier import (
    FitConfig,
    GroupLassoLogistic,
    SparseLinearModel,
    fit,
    group_norms,
    load_model,
    predict,
    save_model,
)
from .features import PropagatedFeatures, build_slimg_features, concat_blocks
from .graph import (
    NormScheme,
    SparseGraph,
    load_edge_list,
    load_features_csv,
    load_labels,
    normalize,
    normalized_laplacian,
    spmm,
)
from .linalg import (
    SvdResult,
    l2_normalize_rows,
    pca_reduce,
    select_rank_by_energy,
    standardize_columns,
    truncated_svd,
)
from .pipeline import SlimGClassifier
from .synth import Features, ScenarioSpec, Structure, SyntheticDataset, gen_scenario

__version__ = "0.1.0"

__all__ = [
    "BaselineSpec",
    "CapacityError",
    "Features",
    "FitConfig",
    "GroupLassoLogistic",
    "NormScheme",
    "PropagatedFeatures",
    "ScenarioSpec",
    "SlimGClassifier",
    "SparseGraph",
    "SparseLinearModel",
    "Structure",
    "SvdResult",
    "SyntheticDataset",
    "build_slimg_features",
    "concat_blocks",
    "fit",
    "gen_scenario",
    "group_norms",
    "l2_normalize_rows",
    "load_edge_list",
    "load_features_csv",
    "load_labels",
    "load_model",
    "normalize",
    "normalized_laplacian",
    "pca_reduce",
    "predict",
    "propagate",
    "save_model",
    "select_rank_by_energy",
    "spmm",
    "standardize_columns",
    "truncated_svd",
]
