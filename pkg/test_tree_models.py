#!/usr/bin/env python3
"""
Test script for decision trees and random forests
"""
import numpy as np
import pytest
from joblib import parallel_backend

from account_records import Scheme, examples_to_matrix
from benchmark_engine import stratified_split
from feature_extractor import label_examples
from synthetic_accounts import default_profiles, generate_dataset
from tree_models import (LEAF, TIE_EPS, ForestParams, TreeParams, best_split, feature_importance, gini,
                         train_decision_tree, train_random_forest)


def brute_force_split(X, y, n_classes):
    """Every (feature, midpoint) pair, lowest feature then lowest threshold on ties"""
    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        feature_best = None
        for a, b in zip(values[:-1], values[1:]):
            t = (a + b) / 2.0
            left = y[X[:, f] <= t]
            right = y[X[:, f] > t]
            impurity = (len(left) * gini(np.bincount(left, minlength=n_classes))
                        + len(right) * gini(np.bincount(right, minlength=n_classes))) / len(y)
            if feature_best is None or impurity < feature_best[1] - TIE_EPS:
                feature_best = (t, impurity)
        if feature_best is not None and (best is None or feature_best[1] < best[2] - TIE_EPS):
            best = (f, feature_best[0], feature_best[1])
    return best


def test_gini():
    assert gini(np.array([5, 0])) == 0.0
    assert gini(np.array([2, 2])) == 0.5
    assert gini(np.array([0, 0])) == 0.0


def test_single_separable_split():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    tree = train_decision_tree(X, y)
    assert tree.node_count == 3
    assert tree.feature[0] == 0
    assert tree.threshold[0] == 0.5
    assert tree.predict(X).tolist() == [0, 0, 1, 1]


def test_pure_dataset_is_single_leaf():
    X = np.random.default_rng(0).normal(size=(10, 3))
    tree = train_decision_tree(X, np.full(10, 2), n_classes=4)
    assert tree.node_count == 1
    assert tree.feature[0] == LEAF
    assert tree.predict(X).tolist() == [2] * 10


def test_root_split_matches_brute_force():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(200):
        X = rng.integers(0, 6, size=(20, 3)).astype(float)
        y = rng.integers(0, 3, size=20)
        if len(np.unique(y)) < 2:
            continue
        expected = brute_force_split(X, y, 3)
        found = best_split(X, y, 3)
        if expected is None:
            assert found is None
            continue
        assert found[0] == expected[0]
        assert found[1] == pytest.approx(expected[1])
        assert found[2] == pytest.approx(expected[2], abs=1e-12)
        tree = train_decision_tree(X, y, n_classes=3)
        assert (tree.feature[0], tree.threshold[0]) == (found[0], found[1])
        checked += 1
    assert checked > 150


def test_majority_tie_goes_to_lowest_class():
    X = np.zeros((4, 1))
    tree = train_decision_tree(X, np.array([2, 1, 2, 1]), n_classes=3)
    assert tree.node_count == 1
    assert tree.predict(X[:1]).tolist() == [1]


def test_unlimited_depth_fits_training_set():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(150, 4))
    y = rng.integers(0, 4, size=150)
    tree = train_decision_tree(X, y)
    assert np.array_equal(tree.predict(X), y)


def test_stopping_rules():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(120, 3))
    y = rng.integers(0, 2, size=120)
    stump = train_decision_tree(X, y, TreeParams(max_depth=1))
    assert stump.depth == 1
    assert stump.node_count == 3
    assert train_decision_tree(X, y, TreeParams(max_depth=0)).node_count == 1
    coarse = train_decision_tree(X, y, TreeParams(min_samples_split=50))
    internal = coarse.feature != LEAF
    assert np.all(coarse.n_samples[internal] >= 50)


def test_scaling_invariance():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] + 0.5 * X[:, 2] > 0).astype(int)
    Q = rng.normal(size=(40, 3))
    plain = train_decision_tree(X, y)
    scaled = train_decision_tree(3.0 * X + 1.0, y)
    assert np.array_equal(plain.feature, scaled.feature)
    assert np.array_equal(plain.predict(Q), scaled.predict(3.0 * Q + 1.0))


def test_empty_training_set():
    with pytest.raises(ValueError):
        train_decision_tree(np.empty((0, 3)), np.empty(0, dtype=int))


def test_param_validation():
    with pytest.raises(ValueError):
        TreeParams(min_samples_split=1)
    with pytest.raises(ValueError):
        TreeParams(max_depth=-1)
    assert ForestParams().tree_params(17).features_per_split == 4
    assert ForestParams(features_per_split=30).tree_params(17).features_per_split == 17


def test_single_tree_forest_equals_tree():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 5))
    y = rng.integers(0, 3, size=100)
    Q = rng.normal(size=(60, 5))
    forest = train_random_forest(X, y, ForestParams(n_trees=1, features_per_split=5, bootstrap=False), seed=3)
    tree = train_decision_tree(X, y)
    assert np.array_equal(forest.predict(Q), tree.predict(Q))
    assert np.array_equal(forest.trees[0].threshold, tree.threshold)


def test_forest_determinism():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(90, 6))
    y = rng.integers(0, 2, size=90)
    params = ForestParams(n_trees=15)
    a = train_random_forest(X, y, params, seed=11)
    b = train_random_forest(X, y, params, seed=11)
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
    with parallel_backend('threading'):
        c = train_random_forest(X, y, params, seed=11, n_jobs=2)
    assert np.array_equal(a.votes(X), c.votes(X))


def test_forest_needs_trees():
    with pytest.raises(ValueError):
        train_random_forest(np.ones((3, 2)), np.array([0, 1, 0]), ForestParams(n_trees=0))


def test_forest_vote_tie_goes_to_lowest_class():
    X = np.array([[0.0], [1.0]])
    y = np.array([1, 0])
    forest = train_random_forest(X, y, ForestParams(n_trees=2, bootstrap=False), seed=0)
    forest.trees[1].value[:] = 1 - forest.trees[0].value
    assert forest.votes(X).tolist() == [[1, 1], [1, 1]]
    assert forest.predict(X).tolist() == [0, 0]


def test_importance_single_informative_feature():
    rng = np.random.default_rng(10)
    X = rng.uniform(size=(200, 5))
    y = (X[:, 0] > 0.5).astype(int)
    forest = train_random_forest(X, y, ForestParams(n_trees=20, features_per_split=5), seed=1)
    importance = feature_importance(forest)
    assert importance[0] > 0.9
    assert importance.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(importance >= 0)


def test_importance_default_sampling_sums_to_one():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(120, 17))
    y = rng.integers(0, 4, size=120)
    importance = feature_importance(train_random_forest(X, y, ForestParams(n_trees=10), seed=2))
    assert len(importance) == 17
    assert importance.sum() == pytest.approx(1.0, abs=1e-9)


def test_importance_uniform_without_splits():
    forest = train_random_forest(np.ones((6, 4)), np.zeros(6, dtype=int), ForestParams(n_trees=3), seed=0)
    assert np.allclose(feature_importance(forest), 0.25)


def test_constant_sampled_features_fall_back():
    X = np.zeros((40, 6))
    X[:, 5] = np.arange(40)
    y = (X[:, 5] >= 20).astype(int)
    forest = train_random_forest(X, y, ForestParams(n_trees=5, features_per_split=1, bootstrap=False), seed=4)
    assert np.array_equal(forest.predict(X), y)


def test_forest_not_worse_than_single_tree_on_accounts():
    dataset = generate_dataset(default_profiles(), per_class=200, seed=1)
    examples = label_examples(dataset.accounts, dict(dataset.labels))
    train, test = stratified_split(examples, 0.25, seed=1)
    X_train, y_train = examples_to_matrix(train, Scheme.TWO_CLASS)
    X_test, y_test = examples_to_matrix(test, Scheme.TWO_CLASS)

    tree = train_decision_tree(X_train, y_train, n_classes=2)
    forest = train_random_forest(X_train, y_train, ForestParams(n_trees=50), seed=1, n_classes=2)
    tree_accuracy = float(np.mean(tree.predict(X_test) == y_test))
    forest_accuracy = float(np.mean(forest.predict(X_test) == y_test))
    assert forest_accuracy >= tree_accuracy - 0.02
