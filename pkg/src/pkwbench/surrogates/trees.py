"""Regression trees, bagged forests, and least-squares gradient boosting.

The tree fitter is exact greedy CART: every split candidate is the midpoint
of two consecutive distinct sorted values, and the winner minimizes the
summed within-child squared error.  Ties are broken deterministically by the
lowest feature index, then the lowest threshold, so a fit is a pure function
of its inputs.  Samples with feature value <= threshold go to the left child.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..errors import EmptyData, ShapeMismatch
from .metrics import compute_metrics

__all__ = [
    "TreeParams",
    "RegressionTree",
    "ForestModel",
    "BoostedModel",
    "fit_tree",
    "fit_forest",
    "fit_gbm",
    "permutation_importance",
]

_LEAF = -1


@dataclasses.dataclass(frozen=True)
class TreeParams:
    """Stopping rules shared by single trees and ensemble members."""

    max_depth: int | None = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")


@dataclasses.dataclass(frozen=True)
class RegressionTree:
    """Flat-array decision tree.

    ``feature[i] == -1`` marks node ``i`` as a leaf; for internal nodes the
    child arrays give node indices and routing is ``x <= threshold`` left.
    ``value`` holds the training-target mean of every node, so leaves carry
    the prediction and internal entries double as fallback diagnostics.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    params: TreeParams

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == _LEAF))

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != _LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def predict(self, X) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.int64)
        pending = np.nonzero(self.feature[node] != _LEAF)[0]
        while pending.size:
            cur = node[pending]
            go_left = X[pending, self.feature[cur]] <= self.threshold[cur]
            node[pending] = np.where(go_left, self.left[cur], self.right[cur])
            pending = pending[self.feature[node[pending]] != _LEAF]
        return self.value[node]


def _check_matrix(X, n_features=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeMismatch(f"feature matrix must be 2-D, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeMismatch(
            f"model was fit with {n_features} features, got {X.shape[1]}"
        )
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    return X


def _check_training_pair(X, y):
    X = _check_matrix(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] == 0:
        raise EmptyData("cannot fit on an empty design matrix")
    if X.shape[1] == 0:
        raise ShapeMismatch("design matrix has no feature columns")
    if y.shape[0] != X.shape[0]:
        raise ShapeMismatch(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if not np.isfinite(y).all():
        raise ValueError("targets must be finite")
    return X, y


def _best_split(X, y, rows, feature_ids, min_leaf):
    """Scan candidate splits; return (feature, threshold) or None.

    The scan visits features in ascending index order and positions in
    ascending threshold order, and only a strictly better score displaces
    the incumbent, which yields the documented tie-breaking for free.
    """
    n = rows.size
    best_score = math.inf
    best = None
    target = y[rows]
    for j in feature_ids:
        xs = X[rows, j]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        ys = target[order]
        if xs[0] == xs[-1]:
            continue
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        n_left = np.arange(1, n)
        sum_left = csum[:-1]
        sq_left = csq[:-1]
        n_right = n - n_left
        sum_right = csum[-1] - sum_left
        sq_right = csq[-1] - sq_left
        score = (sq_left - sum_left * sum_left / n_left) + (
            sq_right - sum_right * sum_right / n_right
        )
        usable = xs[:-1] < xs[1:]
        if min_leaf > 1:
            usable &= (n_left >= min_leaf) & (n_right >= min_leaf)
        if not usable.any():
            continue
        score = np.where(usable, score, math.inf)
        pos = int(np.argmin(score))
        if score[pos] < best_score:
            lo, hi = xs[pos], xs[pos + 1]
            thr = 0.5 * (lo + hi)
            if thr >= hi:
                # the midpoint of adjacent doubles can round up to the
                # upper value; fall back so the right child stays nonempty
                thr = lo
            best_score = float(score[pos])
            best = (j, thr)
    return best


def _grow(X, y, rows, params, feature_rng, max_features):
    """Grow one tree over ``rows`` and return its flat node arrays.

    Nodes are laid out in left-first preorder by processing an explicit
    stack, which also makes the per-split feature subsampling consume the
    random stream in a reproducible order.
    """
    d = X.shape[1]
    feature = []
    threshold = []
    left = []
    right = []
    value = []

    def add_node(rows_, depth):
        idx = len(feature)
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(float(np.mean(y[rows_])))
        return idx

    root = add_node(rows, 0)
    stack = [(root, rows, 0)]
    while stack:
        idx, rows_, depth = stack.pop()
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if rows_.size < params.min_samples_split:
            continue
        target = y[rows_]
        if np.ptp(target) == 0.0:
            continue
        if max_features >= d:
            candidates = range(d)
        else:
            picked = feature_rng.permutation(d)[:max_features]
            picked.sort()
            candidates = picked
        split = _best_split(X, y, rows_, candidates, params.min_samples_leaf)
        if split is None:
            continue
        j, thr = split
        mask = X[rows_, j] <= thr
        left_rows = rows_[mask]
        right_rows = rows_[~mask]
        feature[idx] = j
        threshold[idx] = thr
        left_child = add_node(left_rows, depth + 1)
        right_child = add_node(right_rows, depth + 1)
        left[idx] = left_child
        right[idx] = right_child
        # push right first so the left subtree is numbered first
        stack.append((right_child, right_rows, depth + 1))
        stack.append((left_child, left_rows, depth + 1))
    return (
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=float),
    )


def fit_tree(X, y, params: TreeParams | None = None) -> RegressionTree:
    """Fit an exact greedy least-squares tree."""
    X, y = _check_training_pair(X, y)
    params = params or TreeParams()
    rows = np.arange(X.shape[0])
    arrays = _grow(X, y, rows, params, feature_rng=None, max_features=X.shape[1])
    return RegressionTree(*arrays, n_features=X.shape[1], params=params)


@dataclasses.dataclass(frozen=True)
class ForestModel:
    """Bagged ensemble of trees; the prediction is their plain mean."""

    trees: tuple
    n_features: int
    seed: int
    bootstrap: bool
    max_features: int
    params: TreeParams

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        stacked = np.stack([tree.predict(X) for tree in self.trees])
        return stacked.mean(axis=0)


def fit_forest(
    X,
    y,
    n_trees: int = 100,
    seed: int = 0,
    params: TreeParams | None = None,
    bootstrap: bool = True,
    max_features: int | None = None,
) -> ForestModel:
    """Fit a random forest regressor.

    Every tree gets its own generator derived from ``(seed, tree_index)``,
    a bootstrap resample of the full training size, and a fresh feature
    subset at each split (``ceil(d / 3)`` features unless overridden).
    With ``n_trees=1``, ``bootstrap=False`` and ``max_features`` equal to
    the full feature count the result degenerates to :func:`fit_tree`.
    """
    X, y = _check_training_pair(X, y)
    if n_trees < 1:
        raise ValueError("a forest needs at least one tree")
    params = params or TreeParams()
    d = X.shape[1]
    if max_features is None:
        max_features = math.ceil(d / 3)
    if not 1 <= max_features <= d:
        raise ValueError(f"max_features must be in [1, {d}], got {max_features}")
    n = X.shape[0]
    all_rows = np.arange(n)
    trees = []
    for k in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        rows = rng.integers(0, n, size=n) if bootstrap else all_rows
        arrays = _grow(X, y, rows, params, rng, max_features)
        trees.append(RegressionTree(*arrays, n_features=d, params=params))
    return ForestModel(
        trees=tuple(trees),
        n_features=d,
        seed=seed,
        bootstrap=bootstrap,
        max_features=max_features,
        params=params,
    )


@dataclasses.dataclass(frozen=True)
class BoostedModel:
    """Additive stagewise model: constant base plus shrunken trees."""

    base_value: float
    learning_rate: float
    trees: tuple
    n_features: int
    params: TreeParams
    train_mse_path: tuple

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        out = np.full(X.shape[0], self.base_value)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gbm(
    X,
    y,
    n_trees: int = 300,
    max_depth: int | None = 3,
    learning_rate: float = 0.05,
    min_samples_leaf: int = 1,
) -> BoostedModel:
    """Fit least-squares gradient boosting.

    The base prediction is the target mean; every stage fits a depth-capped
    tree to the current residuals and adds it with the learning rate as
    shrinkage.  Because each tree projects the residuals onto leaf means,
    the training MSE recorded in ``train_mse_path`` (one entry before any
    stage, then one per stage) never increases for rates in (0, 1].
    """
    X, y = _check_training_pair(X, y)
    if n_trees < 1:
        raise ValueError("boosting needs at least one stage")
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError(f"learning_rate must be in (0, 1], got {learning_rate}")
    params = TreeParams(max_depth=max_depth, min_samples_leaf=min_samples_leaf)
    base = float(np.mean(y))
    current = np.full(y.shape, base)
    path = [float(np.mean((y - current) ** 2))]
    trees = []
    for _ in range(n_trees):
        residual = y - current
        tree = fit_tree(X, residual, params)
        trees.append(tree)
        current = current + learning_rate * tree.predict(X)
        path.append(float(np.mean((y - current) ** 2)))
    return BoostedModel(
        base_value=base,
        learning_rate=learning_rate,
        trees=tuple(trees),
        n_features=X.shape[1],
        params=params,
        train_mse_path=tuple(path),
    )


def permutation_importance(model, X, y, seed: int = 0, repeats: int = 10):
    """Mean MSE increase after shuffling one feature column at a time.

    Shuffling breaks the association between a column and the target while
    keeping its marginal distribution, so a column the model ignores scores
    about zero.  Returns an array with one value per feature; values can be
    slightly negative for irrelevant columns, that is noise, not signal.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X = _check_matrix(X, getattr(model, "n_features", None))
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ShapeMismatch(f"{X.shape[0]} rows but {y.shape[0]} targets")
    baseline = compute_metrics(y, model.predict(X)).mse
    rng = np.random.default_rng(seed)
    n, d = X.shape
    importance = np.zeros(d)
    for j in range(d):
        shuffled = X.copy()
        acc = 0.0
        for _ in range(repeats):
            shuffled[:, j] = X[rng.permutation(n), j]
            acc += compute_metrics(y, model.predict(shuffled)).mse - baseline
        importance[j] = acc / repeats
    return importance
