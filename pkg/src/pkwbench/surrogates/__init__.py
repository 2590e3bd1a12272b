"""Surrogate models for discharge-coefficient regression.

Tabular models (tree, forest, boosting) consume the engineered feature
vector; the point-cloud network consumes sampled surface points with the
discharge appended per point.  Everything trains deterministically from an
explicit seed and round-trips through one binary container format.
"""

from .metrics import (
    MetricReport,
    TimingReport,
    compute_metrics,
    r_squared,
    timed_single_predictions,
)
from .pointnet import (
    PointNetConfig,
    PointNetMini,
    attach_discharge,
    fit_pointnet_mini,
    normalize_discharge,
)
from .serialize import load_model, save_model
from .trees import (
    BoostedModel,
    ForestModel,
    RegressionTree,
    TreeParams,
    fit_forest,
    fit_gbm,
    fit_tree,
    permutation_importance,
)

__all__ = [
    "MetricReport",
    "TimingReport",
    "compute_metrics",
    "r_squared",
    "timed_single_predictions",
    "TreeParams",
    "RegressionTree",
    "ForestModel",
    "BoostedModel",
    "fit_tree",
    "fit_forest",
    "fit_gbm",
    "permutation_importance",
    "PointNetConfig",
    "PointNetMini",
    "attach_discharge",
    "fit_pointnet_mini",
    "normalize_discharge",
    "save_model",
    "load_model",
]
