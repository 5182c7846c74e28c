#!/usr/bin/env python3
"""
Tree Models
CART decision trees with Gini splits and bagged random forests with per-split feature sampling
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

# Impurities closer than this are treated as equal when choosing a split
TIE_EPS = 1e-12

LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    features_per_split: Optional[int] = None  # None: every feature at every node

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError(f"features_per_split must be >= 1, got {self.features_per_split}")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    features_per_split: Optional[int] = None  # None: floor(sqrt(n_features))
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    bootstrap: bool = True

    def tree_params(self, n_features: int) -> TreeParams:
        m = self.features_per_split
        if m is None:
            m = max(1, int(np.floor(np.sqrt(n_features))))
        return TreeParams(max_depth=self.max_depth,
                          min_samples_split=self.min_samples_split,
                          features_per_split=min(m, n_features))


@dataclass
class DecisionTreeModel:
    """
    Binary tree stored as parallel node arrays (node 0 is the root)

    Internal nodes route x[feature] <= threshold to `left`; leaves have
    feature == LEAF. `value` holds the majority class of every node.
    """
    n_features: int
    n_classes: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    n_samples: np.ndarray
    params: TreeParams

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X"""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def impurity_decrease(self) -> np.ndarray:
        """Total weighted Gini decrease per feature"""
        decrease = np.zeros(self.n_features)
        for node in np.flatnonzero(self.feature != LEAF):
            left, right = self.left[node], self.right[node]
            gain = (self.n_samples[node] * self.impurity[node]
                    - self.n_samples[left] * self.impurity[left]
                    - self.n_samples[right] * self.impurity[right])
            decrease[self.feature[node]] += max(gain, 0.0)
        return decrease


def gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.dot(p, p))


def _feature_best_split(x: np.ndarray, onehot: np.ndarray) -> Optional[Tuple[float, float]]:
    """
    Best midpoint split on one feature

    Returns:
        (weighted child impurity, threshold) or None when x is constant
    """
    n = len(x)
    order = np.argsort(x, kind='stable')
    xs = x[order]
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None

    left = np.cumsum(onehot[order], axis=0)[:-1]
    right = onehot.sum(axis=0) - left
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    impurity = (n_left - (left * left).sum(axis=1) / n_left
                + n_right - (right * right).sum(axis=1) / n_right) / n
    impurity = np.where(valid, impurity, np.inf)

    best = impurity.min()
    idx = int(np.flatnonzero(impurity <= best + TIE_EPS)[0])
    threshold = (xs[idx] + xs[idx + 1]) / 2.0
    if threshold >= xs[idx + 1]:
        # midpoint rounded up onto the right value
        threshold = xs[idx]
    return float(impurity[idx]), float(threshold)


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int,
               features: Optional[Sequence[int]] = None) -> Optional[Tuple[int, float, float]]:
    """
    Exhaustive Gini split search

    Args:
        X: Node samples
        y: Class indices of the node samples
        n_classes: Number of classes
        features: Candidate feature indices (all when None)

    Returns:
        (feature, threshold, weighted child impurity), or None when every
        candidate feature is constant. Ties go to the lowest feature index,
        then the lowest threshold.
    """
    onehot = np.eye(n_classes)[y]
    candidates = range(X.shape[1]) if features is None else sorted(features)
    best = None
    for f in candidates:
        found = _feature_best_split(X[:, f], onehot)
        if found is None:
            continue
        impurity, threshold = found
        if best is None or impurity < best[2] - TIE_EPS:
            best = (int(f), threshold, impurity)
    return best


def _node_split(X: np.ndarray, y: np.ndarray, n_classes: int, params: TreeParams,
                rng: np.random.Generator) -> Optional[Tuple[int, float, float]]:
    d = X.shape[1]
    m = params.features_per_split
    if m is None or m >= d:
        return best_split(X, y, n_classes)

    # Keep drawing past the sample when all sampled features are constant here
    permutation = rng.permutation(d)
    found = best_split(X, y, n_classes, permutation[:m])
    for f in permutation[m:]:
        if found is not None:
            break
        found = best_split(X, y, n_classes, [f])
    return found


def _grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, params: TreeParams,
               rng: np.random.Generator) -> DecisionTreeModel:
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[int] = []
    impurity: List[float] = []
    n_samples: List[int] = []

    def new_node(rows: np.ndarray) -> int:
        counts = np.bincount(y[rows], minlength=n_classes)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(int(counts.argmax()))
        impurity.append(gini(counts))
        n_samples.append(len(rows))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if (impurity[node] == 0.0
                or len(rows) < params.min_samples_split
                or (params.max_depth is not None and depth >= params.max_depth)):
            continue
        split = _node_split(X[rows], y[rows], n_classes, params, rng)
        if split is None:
            continue
        f, t, _ = split
        goes_left = X[rows, f] <= t
        feature[node] = f
        threshold[node] = t
        left[node] = new_node(rows[goes_left])
        right[node] = new_node(rows[~goes_left])
        # right first so the left subtree is expanded next
        stack.append((right[node], rows[~goes_left], depth + 1))
        stack.append((left[node], rows[goes_left], depth + 1))

    return DecisionTreeModel(
        n_features=X.shape[1],
        n_classes=n_classes,
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        value=np.array(value, dtype=int),
        impurity=np.array(impurity, dtype=float),
        n_samples=np.array(n_samples, dtype=int),
        params=params,
    )


def _check_training_data(X: np.ndarray, y: np.ndarray, n_classes: Optional[int]) -> Tuple[np.ndarray, np.ndarray, int]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("training set is empty")
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)} labels")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return X, y, n_classes


def train_decision_tree(X: np.ndarray, y: np.ndarray, params: Optional[TreeParams] = None,
                        seed: int = 0, n_classes: Optional[int] = None) -> DecisionTreeModel:
    """
    Grow a CART classification tree

    Every node with a valid split is split until it is pure, smaller than
    min_samples_split, or at max_depth. Leaves predict the majority class
    (lowest index on ties).

    Args:
        X: Training matrix (n, d)
        y: Class indices
        params: Stopping rules and optional per-node feature sampling
        seed: Only used when features_per_split samples features
        n_classes: Class count (max label + 1 when None)

    Raises:
        ValueError: empty training set
    """
    X, y, n_classes = _check_training_data(X, y, n_classes)
    params = params or TreeParams()
    tree = _grow_tree(X, y, n_classes, params, np.random.default_rng(seed))
    logger.debug("Grew tree: %d nodes, depth %d", tree.node_count, tree.depth)
    return tree


@dataclass
class RandomForestModel:
    trees: List[DecisionTreeModel]
    n_features: int
    n_classes: int
    params: ForestParams
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        counts = np.zeros((len(X), self.n_classes), dtype=int)
        rows = np.arange(len(X))
        for tree in self.trees:
            counts[rows, tree.predict(X)] += 1
        return counts

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote; argmax keeps the lowest class index on ties"""
        return self.votes(X).argmax(axis=1)


def _grow_member(X: np.ndarray, y: np.ndarray, n_classes: int, params: ForestParams,
                 tree_params: TreeParams, seed: int, index: int) -> DecisionTreeModel:
    rng = np.random.default_rng([seed, index])
    if params.bootstrap:
        rows = rng.integers(0, len(y), size=len(y))
        return _grow_tree(X[rows], y[rows], n_classes, tree_params, rng)
    return _grow_tree(X, y, n_classes, tree_params, rng)


def train_random_forest(X: np.ndarray, y: np.ndarray, params: Optional[ForestParams] = None,
                        seed: int = 0, n_classes: Optional[int] = None, n_jobs: int = 1) -> RandomForestModel:
    """
    Train a bagged forest of CART trees

    Tree i draws its bootstrap sample and split features from an RNG seeded
    with (seed, i), so the forest does not depend on n_jobs.

    Raises:
        ValueError: n_trees < 1 or empty training set
    """
    params = params or ForestParams()
    if params.n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {params.n_trees}")
    X, y, n_classes = _check_training_data(X, y, n_classes)
    tree_params = params.tree_params(X.shape[1])

    if n_jobs == 1:
        trees = [_grow_member(X, y, n_classes, params, tree_params, seed, i) for i in range(params.n_trees)]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_grow_member)(X, y, n_classes, params, tree_params, seed, i) for i in range(params.n_trees))

    logger.info("Trained random forest: %d trees, %d features per split",
                len(trees), tree_params.features_per_split)
    return RandomForestModel(trees=trees, n_features=X.shape[1], n_classes=n_classes,
                             params=replace(params, features_per_split=tree_params.features_per_split),
                             seed=seed)


def feature_importance(model: RandomForestModel) -> np.ndarray:
    """
    Mean decrease in Gini impurity

    Each tree's decreases are normalized to sum to 1, averaged over the
    trees that split at all, then renormalized. A forest of single leaves
    gets uniform weights.
    """
    total = np.zeros(model.n_features)
    for tree in model.trees:
        decrease = tree.impurity_decrease()
        s = decrease.sum()
        if s > 0:
            total += decrease / s
    if total.sum() <= 0:
        return np.full(model.n_features, 1.0 / model.n_features)
    return total / total.sum()
