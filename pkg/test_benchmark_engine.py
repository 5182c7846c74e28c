#!/usr/bin/env python3
"""
Test script for metrics, stratified splits and the benchmark report
"""
import json

import numpy as np
import pandas as pd
import pytest

from account_records import Scheme, UserClass, examples_to_matrix
from benchmark_engine import (ConfusionMatrix, SplitError, benchmark_all, compute_metrics, k_fold_cv,
                              report_markdown, stratified_folds, stratified_split, stratified_split_indices,
                              write_report)
from model_pipeline import HyperParams

FAST = HyperParams(n_trees=10, max_passes=50)


def test_perfect_diagonal():
    cm = ConfusionMatrix.from_predictions([0, 1, 2, 2], [0, 1, 2, 2], ('a', 'b', 'c'))
    metrics = compute_metrics(cm)
    assert metrics.accuracy == 1.0
    assert metrics.macro_f1 == 1.0


def test_hand_computed_metrics():
    cm = ConfusionMatrix.from_predictions([0, 0, 1, 1], [0, 1, 1, 1], ('A', 'B'))
    assert cm.counts.tolist() == [[1, 1], [0, 2]]
    metrics = compute_metrics(cm)
    assert metrics.accuracy == 0.75
    assert metrics.precision.tolist() == pytest.approx([1.0, 2.0 / 3.0])
    assert metrics.recall.tolist() == pytest.approx([0.5, 1.0])
    assert metrics.f1.tolist() == pytest.approx([2.0 / 3.0, 0.8])
    assert metrics.macro_f1 == pytest.approx(0.7333, abs=1e-4)
    assert metrics.summary() == {'accuracy': 75.0, 'precision': 83.33, 'recall': 75.0, 'f1': 73.33}


def test_zero_denominators():
    cm = ConfusionMatrix.from_predictions([0, 0, 0], [0, 0, 0], ('A', 'B'))
    metrics = compute_metrics(cm)
    assert metrics.precision.tolist() == [1.0, 0.0]
    assert metrics.recall.tolist() == [1.0, 0.0]
    assert metrics.f1.tolist() == [1.0, 0.0]
    with pytest.raises(ValueError):
        compute_metrics(ConfusionMatrix.from_predictions([], [], ('A', 'B')))


def test_binary_accuracy_matches_counts():
    rng = np.random.default_rng(41)
    truth = rng.integers(0, 2, size=200)
    pred = rng.integers(0, 2, size=200)
    tp = int(np.sum((truth == 1) & (pred == 1)))
    tn = int(np.sum((truth == 0) & (pred == 0)))
    cm = ConfusionMatrix.from_predictions(truth, pred, ('real', 'fake'))
    assert compute_metrics(cm).accuracy == pytest.approx((tp + tn) / 200)
    assert cm.total == 200


def test_macro_metrics_invariant_under_class_permutation():
    rng = np.random.default_rng(17)
    labels = ('authentic', 'active_fake', 'inactive_fake', 'spammer')
    truth = rng.integers(0, 4, size=120)
    pred = np.where(rng.random(120) < 0.6, truth, rng.integers(0, 4, size=120))
    base = compute_metrics(ConfusionMatrix.from_predictions(truth, pred, labels))
    for perm in ([3, 2, 1, 0], [1, 0, 3, 2], [2, 3, 0, 1]):
        perm = np.array(perm)
        permuted_labels = [None] * 4
        for old, new in enumerate(perm):
            permuted_labels[new] = labels[old]
        metrics = compute_metrics(ConfusionMatrix.from_predictions(perm[truth], perm[pred], permuted_labels))
        assert metrics.macro_f1 == pytest.approx(base.macro_f1, abs=1e-12)
        assert metrics.macro_precision == pytest.approx(base.macro_precision, abs=1e-12)
        assert metrics.accuracy == base.accuracy
        assert metrics.f1[perm].tolist() == pytest.approx(base.f1.tolist())


def test_split_counts():
    labels = np.repeat(np.arange(4), [100, 100, 100, 100])
    train, test = stratified_split_indices(labels, 0.25, seed=42)
    assert len(test) == 100
    assert len(train) == 300
    assert np.bincount(labels[test]).tolist() == [25, 25, 25, 25]
    assert not set(train) & set(test)
    assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(400))


def test_split_minimum_test_size():
    labels = np.array([0, 0, 1, 1, 1])
    train, test = stratified_split_indices(labels, 0.1, seed=0)
    assert np.bincount(labels[test]).tolist() == [1, 1]
    assert len(train) == 3


def test_split_errors():
    with pytest.raises(SplitError):
        stratified_split_indices([0, 0, 1], 0.25)
    with pytest.raises(SplitError):
        stratified_split_indices([0, 0, 1, 1], 1.0)


def test_split_deterministic(small_examples):
    a_train, a_test = stratified_split(small_examples, 0.25, seed=7)
    b_train, b_test = stratified_split(small_examples, 0.25, seed=7)
    assert [e.account_id for e in a_test] == [e.account_id for e in b_test]
    _, c_test = stratified_split(small_examples, 0.25, seed=8)
    assert [e.account_id for e in a_test] != [e.account_id for e in c_test]
    assert len(a_train) + len(a_test) == len(small_examples)


def test_folds_partition():
    labels = np.repeat(np.arange(3), [10, 7, 5])
    folds = stratified_folds(labels, 5, seed=1)
    assert len(folds) == 5
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(22))
    for fold in folds:
        assert np.bincount(labels[fold], minlength=3).tolist()[2] == 1
    with pytest.raises(SplitError):
        stratified_folds(labels, 6)
    with pytest.raises(SplitError):
        stratified_folds(labels, 1)


def test_k_fold_cv_bounds(small_examples):
    result = k_fold_cv(small_examples, 4, 'dt', Scheme.TWO_CLASS, seed=3)
    assert len(result.fold_metrics) == 4
    stats = result.stats()['accuracy']
    assert stats['min'] <= stats['mean'] <= stats['max']


def test_single_cell_shape(small_examples):
    report = benchmark_all(small_examples, ['rf'], [Scheme.TWO_CLASS], params=FAST)
    assert len(report.rows) == 1
    row = report.rows[0]
    assert set(row.metrics.summary()) == {'accuracy', 'precision', 'recall', 'f1'}
    assert report.n_test == 4 * 10
    assert row.importance is not None
    assert row.importance.sum() == pytest.approx(1.0)


def test_benchmark_rows_in_report_order(small_examples):
    report = benchmark_all(small_examples, ['dt', 'knn'], [Scheme.FOUR_CLASS, Scheme.TWO_CLASS], params=FAST)
    assert [(r.algorithm, r.scheme) for r in report.rows] == [
        ('knn', Scheme.TWO_CLASS), ('knn', Scheme.FOUR_CLASS),
        ('dt', Scheme.TWO_CLASS), ('dt', Scheme.FOUR_CLASS)]
    assert report.top_predictors() == {}


def test_prediction_dump_reproduces_metrics(tmp_path, small_examples):
    report = benchmark_all(small_examples, ['dt', 'rf'], list(Scheme), params=FAST, folds=3)
    paths = write_report(report, str(tmp_path / 'eval'))

    for row in report.rows:
        dump = pd.read_csv(paths[f"predictions_{row.algorithm}_{row.scheme.value}.csv"])
        assert list(dump.columns) == ['account_id', 'truth', 'pred']
        labels = list(row.scheme.labels)
        truth = [labels.index(v) for v in dump['truth']]
        pred = [labels.index(v) for v in dump['pred']]
        recomputed = compute_metrics(ConfusionMatrix.from_predictions(truth, pred, labels))
        assert recomputed.summary() == row.metrics.summary()

    with open(paths['json'], encoding='utf-8') as f:
        data = json.load(f)
    assert len(data['results']) == 4
    assert data['split']['n_test'] == report.n_test
    assert set(data['top_predictors']) == {'two_class', 'four_class'}

    with open(paths['cv_json'], encoding='utf-8') as f:
        assert len(json.load(f)['folds']) == 4

    frame = pd.read_csv(paths['csv'])
    assert frame.shape == (4, 6)


def test_report_deterministic(tmp_path, small_examples):
    outputs = []
    for name in ('first', 'second'):
        report = benchmark_all(small_examples, ['rf', 'svm-rbf'], list(Scheme), params=FAST, seed=9)
        paths = write_report(report, str(tmp_path / name))
        with open(paths['markdown'], encoding='utf-8') as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]


def test_markdown_table_shape(small_examples):
    report = benchmark_all(small_examples, ['rf', 'knn', 'svm-poly', 'svm-rbf', 'dt'], list(Scheme), params=FAST)
    table = report_markdown(report).split('\n\n')[2]
    lines = table.strip().splitlines()
    assert len(lines) == 2 + 5
    assert lines[2].startswith('| Random forest |')
    assert lines[0].count('|') == 1 + 1 + 8


def test_binary_projection_used(small_examples):
    report = benchmark_all(small_examples, ['dt'], [Scheme.TWO_CLASS], params=FAST)
    _, test = stratified_split(small_examples)
    _, y = examples_to_matrix(test, Scheme.TWO_CLASS)
    assert np.array_equal(report.rows[0].truth, y)
    assert int(np.sum(y == 0)) == sum(e.label is UserClass.AUTHENTIC for e in test)


@pytest.mark.slow
def test_default_dataset_benchmark(default_examples):
    report = benchmark_all(default_examples)
    for scheme in Scheme:
        accuracies = {r.algorithm: r.metrics.accuracy for r in report.rows if r.scheme is scheme}
        assert accuracies['rf'] == max(accuracies.values())
    rf_two = report.row('rf', Scheme.TWO_CLASS).metrics.accuracy
    assert 0.85 <= rf_two < 0.99
    for algorithm in report.algorithms:
        two = report.row(algorithm, Scheme.TWO_CLASS).metrics.accuracy
        four = report.row(algorithm, Scheme.FOUR_CLASS).metrics.accuracy
        assert four <= two + 0.02
