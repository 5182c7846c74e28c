#!/usr/bin/env python3
"""
Benchmark Engine
Stratified splits, confusion-matrix metrics, the algorithm x scheme benchmark table and its reports
"""
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from account_records import FEATURE_SETS, LabeledExample, Scheme, examples_to_matrix
from model_pipeline import ALGORITHMS, HyperParams, train_pipeline
from report_io import markdown_table, write_json, write_text
from tree_models import feature_importance

logger = logging.getLogger(__name__)

DEFAULT_TEST_FRACTION = 0.25
DEFAULT_SEED = 42

# Top predictors as published for the original (non-synthetic) dataset; report-only
PUBLISHED_TOP_PREDICTORS: Dict[Scheme, Tuple[str, ...]] = {
    Scheme.TWO_CLASS: ('pos', 'flw', 'lin', 'flg', 'bl'),
    Scheme.FOUR_CLASS: ('pos', 'flw', 'bl', 'flg'),
}

SCHEME_TITLES = {Scheme.TWO_CLASS: '2-class', Scheme.FOUR_CLASS: '4-class'}


class SplitError(ValueError):
    """Classes too small for the requested split or fold count"""


def percent(value: float) -> float:
    return round(100.0 * value, 2)


@dataclass
class ConfusionMatrix:
    """Counts with rows = truth and columns = prediction"""
    counts: np.ndarray
    labels: Tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_predictions(cls, truth: Sequence[int], pred: Sequence[int],
                         labels: Sequence[str]) -> 'ConfusionMatrix':
        n = len(labels)
        counts = np.zeros((n, n), dtype=int)
        np.add.at(counts, (np.asarray(truth, dtype=int), np.asarray(pred, dtype=int)), 1)
        return cls(counts=counts, labels=tuple(labels))

    def to_markdown(self) -> str:
        header = ['truth \\ pred'] + list(self.labels)
        rows = [[label] + [int(c) for c in self.counts[i]] for i, label in enumerate(self.labels)]
        return markdown_table(header, rows)


@dataclass
class Metrics:
    """Fractions in [0, 1]; per-class arrays follow the label order"""
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    @property
    def macro_precision(self) -> float:
        return float(np.mean(self.precision))

    @property
    def macro_recall(self) -> float:
        return float(np.mean(self.recall))

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1))

    def weighted(self, values: np.ndarray) -> float:
        total = self.support.sum()
        return float(np.dot(values, self.support) / total) if total else 0.0

    def summary(self) -> Dict[str, float]:
        """Accuracy and macro averages as percentages"""
        return {
            'accuracy': percent(self.accuracy),
            'precision': percent(self.macro_precision),
            'recall': percent(self.macro_recall),
            'f1': percent(self.macro_f1),
        }


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    """
    Accuracy plus per-class precision/recall/F1

    Zero denominators give 0 for that class.

    Raises:
        ValueError: empty confusion matrix
    """
    if cm.total <= 0:
        raise ValueError("cannot compute metrics from an empty confusion matrix")
    tp = np.diag(cm.counts).astype(float)
    predicted = cm.counts.sum(axis=0)
    actual = cm.counts.sum(axis=1)
    precision = _safe_ratio(tp, predicted)
    recall = _safe_ratio(tp, actual)
    f1 = _safe_ratio(2 * precision * recall, precision + recall)
    return Metrics(accuracy=float(tp.sum()) / cm.total, precision=precision, recall=recall,
                   f1=f1, support=actual.astype(int))


def stratified_split_indices(labels: Sequence[int], test_fraction: float = DEFAULT_TEST_FRACTION,
                             seed: int = DEFAULT_SEED) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per class: n_test = max(1, floor(n_c * test_fraction)), the rest trains

    Returns:
        (train indices, test indices), each sorted ascending

    Raises:
        SplitError: a class with fewer than 2 examples or a fraction outside (0, 1)
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            raise SplitError(f"class {c} has {len(members)} example(s); a stratified split needs at least 2")
        shuffled = rng.permutation(members)
        n_test = max(1, int(np.floor(len(members) * test_fraction)))
        test.append(shuffled[:n_test])
        train.append(shuffled[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _class_labels(examples: Sequence[LabeledExample]) -> np.ndarray:
    return np.array([int(ex.label) for ex in examples], dtype=int)


def stratified_split(examples: Sequence[LabeledExample], test_fraction: float = DEFAULT_TEST_FRACTION,
                     seed: int = DEFAULT_SEED) -> Tuple[List[LabeledExample], List[LabeledExample]]:
    """Split on the four behavioral classes so both schemes stay stratified"""
    train_idx, test_idx = stratified_split_indices(_class_labels(examples), test_fraction, seed)
    return [examples[i] for i in train_idx], [examples[i] for i in test_idx]


def stratified_folds(labels: Sequence[int], k: int, seed: int = DEFAULT_SEED) -> List[np.ndarray]:
    """
    Test indices of k stratified folds

    Raises:
        SplitError: k < 2 or a class with fewer than k examples
    """
    if k < 2:
        raise SplitError(f"need at least 2 folds, got {k}")
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    parts: List[List[np.ndarray]] = [[] for _ in range(k)]
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < k:
            raise SplitError(f"class {c} has {len(members)} example(s), fewer than k={k} folds")
        for fold, chunk in enumerate(np.array_split(rng.permutation(members), k)):
            parts[fold].append(chunk)
    return [np.sort(np.concatenate(chunks)) for chunks in parts]


@dataclass
class CvResult:
    algorithm: str
    scheme: Scheme
    k: int
    fold_metrics: List[Metrics]

    def stats(self) -> Dict[str, Dict[str, float]]:
        """Mean and population std of each summary metric, in percent"""
        table = pd.DataFrame([m.summary() for m in self.fold_metrics])
        return {name: {'mean': round(float(table[name].mean()), 2),
                       'std': round(float(table[name].std(ddof=0)), 2),
                       'min': float(table[name].min()),
                       'max': float(table[name].max())}
                for name in table.columns}


def k_fold_cv(examples: Sequence[LabeledExample], k: int, algorithm: str, scheme: Scheme,
              seed: int = DEFAULT_SEED, params: Optional[HyperParams] = None, feature_set: str = 'all') -> CvResult:
    """
    Stratified k-fold cross-validation of one algorithm under one scheme

    Raises:
        SplitError: k < 2 or a class smaller than k
    """
    folds = stratified_folds(_class_labels(examples), k, seed)
    X, y = examples_to_matrix(examples, scheme, feature_set)
    fold_metrics = []
    for fold, test_idx in enumerate(folds):
        mask = np.ones(len(y), dtype=bool)
        mask[test_idx] = False
        pipeline = train_pipeline(X[mask], y[mask], scheme, algorithm, params, seed, feature_set)
        cm = ConfusionMatrix.from_predictions(y[test_idx], pipeline.predict(X[test_idx]), scheme.labels)
        fold_metrics.append(compute_metrics(cm))
        logger.debug("Fold %d/%d %s %s: accuracy %.4f", fold + 1, k, algorithm, scheme.value,
                     fold_metrics[-1].accuracy)
    return CvResult(algorithm=algorithm, scheme=scheme, k=k, fold_metrics=fold_metrics)


@dataclass
class BenchmarkRow:
    algorithm: str
    scheme: Scheme
    confusion: ConfusionMatrix
    metrics: Metrics
    account_ids: List[str]
    truth: np.ndarray
    pred: np.ndarray
    train_seconds: float
    predict_seconds: float
    importance: Optional[np.ndarray] = None

    @property
    def display_name(self) -> str:
        return ALGORITHMS[self.algorithm]


@dataclass
class BenchmarkReport:
    rows: List[BenchmarkRow]
    seed: int
    test_fraction: float
    feature_set: str
    n_train: int
    n_test: int
    params: HyperParams
    cv_results: List[CvResult] = field(default_factory=list)

    @property
    def schemes(self) -> List[Scheme]:
        return [s for s in Scheme if any(r.scheme is s for r in self.rows)]

    @property
    def algorithms(self) -> List[str]:
        return [a for a in ALGORITHMS if any(r.algorithm == a for r in self.rows)]

    def row(self, algorithm: str, scheme: Scheme) -> Optional[BenchmarkRow]:
        for r in self.rows:
            if r.algorithm == algorithm and r.scheme is scheme:
                return r
        return None

    def importances(self) -> Dict[Scheme, Dict[str, float]]:
        names = FEATURE_SETS[self.feature_set]
        return {r.scheme: dict(zip(names, (float(v) for v in r.importance)))
                for r in self.rows if r.importance is not None}

    def top_predictors(self) -> Dict[Scheme, Dict]:
        """Measured importance ranking next to the published one"""
        comparison = {}
        for scheme, weights in self.importances().items():
            published = PUBLISHED_TOP_PREDICTORS[scheme]
            ranked = sorted(weights, key=lambda name: (-weights[name], FEATURE_SETS[self.feature_set].index(name)))
            measured = ranked[:len(published)]
            comparison[scheme] = {
                'measured': measured,
                'published': list(published),
                'overlap': len(set(measured) & set(published)),
            }
        return comparison


def benchmark_all(examples: Sequence[LabeledExample], algorithms: Sequence[str] = tuple(ALGORITHMS),
                  schemes: Sequence[Scheme] = tuple(Scheme), test_fraction: float = DEFAULT_TEST_FRACTION,
                  seed: int = DEFAULT_SEED, params: Optional[HyperParams] = None, feature_set: str = 'all',
                  folds: Optional[int] = None) -> BenchmarkReport:
    """
    Train and evaluate every (algorithm, scheme) cell on one stratified hold-out split

    Args:
        examples: Labeled dataset
        algorithms: Keys of ALGORITHMS (rows come out in report order regardless)
        schemes: Label schemes to evaluate
        test_fraction: Hold-out fraction per class
        seed: Split and training seed
        params: Hyperparameters shared by all cells
        feature_set: Feature columns to use
        folds: Also run stratified k-fold CV per cell when set

    Returns:
        BenchmarkReport with rows ordered by algorithm, then scheme
    """
    params = params or HyperParams()
    train, test = stratified_split(examples, test_fraction, seed)
    logger.info("Split %d examples into %d train / %d test (seed %d)", len(examples), len(train), len(test), seed)

    ordered_algorithms = [a for a in ALGORITHMS if a in algorithms]
    ordered_schemes = [s for s in Scheme if s in schemes]
    rows = []
    cv_results = []
    for algorithm in ordered_algorithms:
        for scheme in ordered_schemes:
            X_train, y_train = examples_to_matrix(train, scheme, feature_set)
            X_test, y_test = examples_to_matrix(test, scheme, feature_set)

            started = time.perf_counter()
            pipeline = train_pipeline(X_train, y_train, scheme, algorithm, params, seed, feature_set)
            trained = time.perf_counter()
            pred = pipeline.predict(X_test)
            predicted = time.perf_counter()

            cm = ConfusionMatrix.from_predictions(y_test, pred, scheme.labels)
            metrics = compute_metrics(cm)
            rows.append(BenchmarkRow(
                algorithm=algorithm,
                scheme=scheme,
                confusion=cm,
                metrics=metrics,
                account_ids=[ex.account_id for ex in test],
                truth=y_test,
                pred=pred,
                train_seconds=trained - started,
                predict_seconds=predicted - trained,
                importance=feature_importance(pipeline.model) if algorithm == 'rf' else None,
            ))
            logger.info("%s %s: accuracy %.2f%%, macro-F1 %.2f%%", ALGORITHMS[algorithm],
                        SCHEME_TITLES[scheme], 100 * metrics.accuracy, 100 * metrics.macro_f1)

            if folds:
                cv_results.append(k_fold_cv(examples, folds, algorithm, scheme, seed, params, feature_set))

    return BenchmarkReport(rows=rows, seed=seed, test_fraction=test_fraction, feature_set=feature_set,
                           n_train=len(train), n_test=len(test), params=params, cv_results=cv_results)


def report_markdown(report: BenchmarkReport) -> str:
    schemes = report.schemes
    header = ['Algorithm']
    for scheme in schemes:
        title = SCHEME_TITLES[scheme]
        header += [f"{title} acc", f"{title} prec", f"{title} recall", f"{title} F1"]
    rows = []
    for algorithm in report.algorithms:
        cells = [ALGORITHMS[algorithm]]
        for scheme in schemes:
            row = report.row(algorithm, scheme)
            if row is None:
                cells += ['-'] * 4
            else:
                s = row.metrics.summary()
                cells += [f"{s['accuracy']:.2f}", f"{s['precision']:.2f}", f"{s['recall']:.2f}", f"{s['f1']:.2f}"]
        rows.append(cells)

    parts = [
        "# Benchmark\n\n",
        f"Stratified hold-out: {report.n_train} train / {report.n_test} test "
        f"(test fraction {report.test_fraction}), seed {report.seed}, feature set '{report.feature_set}'. "
        "Precision, recall and F1 are macro averages in percent.\n\n",
        markdown_table(header, rows),
    ]

    top = report.top_predictors()
    if top:
        parts.append("\n## Random forest feature importance\n\n")
        for scheme, comparison in top.items():
            weights = report.importances()[scheme]
            ranked = sorted(weights.items(), key=lambda item: -item[1])
            parts.append(f"### {SCHEME_TITLES[scheme]}\n\n")
            parts.append(markdown_table(['feature', 'importance'], [[n, f"{w:.4f}"] for n, w in ranked]))
            parts.append(f"\nTop {len(comparison['published'])}: {', '.join(comparison['measured'])} "
                         f"(published: {', '.join(comparison['published'])}; overlap {comparison['overlap']})\n\n")

    parts.append("\n## Confusion matrices\n\n")
    for row in report.rows:
        parts.append(f"### {row.display_name}, {SCHEME_TITLES[row.scheme]}\n\n")
        parts.append(row.confusion.to_markdown() + "\n")
    return ''.join(parts)


def report_frame(report: BenchmarkReport) -> pd.DataFrame:
    records = []
    for row in report.rows:
        record = {'algorithm': row.algorithm, 'scheme': row.scheme.value}
        record.update(row.metrics.summary())
        records.append(record)
    return pd.DataFrame(records, columns=['algorithm', 'scheme', 'accuracy', 'precision', 'recall', 'f1'])


def report_dict(report: BenchmarkReport) -> Dict:
    results = []
    for row in report.rows:
        m = row.metrics
        results.append({
            'algorithm': row.algorithm,
            'display_name': row.display_name,
            'scheme': row.scheme.value,
            'accuracy': percent(m.accuracy),
            'macro': {'precision': percent(m.macro_precision), 'recall': percent(m.macro_recall),
                      'f1': percent(m.macro_f1)},
            'weighted': {'precision': percent(m.weighted(m.precision)), 'recall': percent(m.weighted(m.recall)),
                         'f1': percent(m.weighted(m.f1))},
            'per_class': {label: {'precision': percent(m.precision[i]), 'recall': percent(m.recall[i]),
                                  'f1': percent(m.f1[i]), 'support': int(m.support[i])}
                          for i, label in enumerate(row.confusion.labels)},
            'confusion_matrix': row.confusion.counts.tolist(),
        })

    return {
        'seed': report.seed,
        'feature_set': report.feature_set,
        'split': {'method': 'stratified_holdout', 'test_fraction': report.test_fraction,
                  'n_train': report.n_train, 'n_test': report.n_test},
        'hyperparameters': report.params.to_dict(),
        'results': results,
        'feature_importance': {s.value: {n: round(w, 6) for n, w in weights.items()}
                               for s, weights in report.importances().items()},
        'top_predictors': {s.value: c for s, c in report.top_predictors().items()},
    }


def cv_dict(results: Sequence[CvResult]) -> Dict:
    return {'folds': [{'algorithm': r.algorithm, 'scheme': r.scheme.value, 'k': r.k,
                       'metrics': r.stats(),
                       'fold_accuracy': [percent(m.accuracy) for m in r.fold_metrics]}
                      for r in results]}


def cv_markdown(results: Sequence[CvResult]) -> str:
    header = ['Algorithm', 'Scheme', 'k', 'acc', 'prec', 'recall', 'F1']
    rows = []
    for r in results:
        stats = r.stats()
        rows.append([ALGORITHMS[r.algorithm], SCHEME_TITLES[r.scheme], r.k] +
                    [f"{stats[name]['mean']:.2f} ± {stats[name]['std']:.2f}"
                     for name in ('accuracy', 'precision', 'recall', 'f1')])
    return "# Stratified k-fold cross-validation (mean ± std, percent)\n\n" + markdown_table(header, rows)


def write_predictions(row: BenchmarkRow, path: str) -> str:
    labels = row.confusion.labels
    df = pd.DataFrame({
        'account_id': row.account_ids,
        'truth': [labels[i] for i in row.truth],
        'pred': [labels[i] for i in row.pred],
    }, columns=['account_id', 'truth', 'pred'])
    df.to_csv(path, index=False, lineterminator='\n')
    return path


def write_report(report: BenchmarkReport, out_dir: str) -> Dict[str, str]:
    """
    Write report.md/.csv/.json, one prediction dump per cell and timings.json

    Everything except timings.json depends only on data, flags and seed.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        'markdown': write_text(os.path.join(out_dir, 'report.md'), report_markdown(report)),
        'json': write_json(os.path.join(out_dir, 'report.json'), report_dict(report)),
    }
    paths['csv'] = os.path.join(out_dir, 'report.csv')
    report_frame(report).to_csv(paths['csv'], index=False, float_format='%.2f', lineterminator='\n')

    for row in report.rows:
        name = f"predictions_{row.algorithm}_{row.scheme.value}.csv"
        paths[name] = write_predictions(row, os.path.join(out_dir, name))

    timings = {f"{row.algorithm}/{row.scheme.value}": {'train_seconds': round(row.train_seconds, 4),
                                                        'predict_seconds': round(row.predict_seconds, 4)}
               for row in report.rows}
    paths['timings'] = write_json(os.path.join(out_dir, 'timings.json'), timings)

    if report.cv_results:
        paths['cv_json'] = write_json(os.path.join(out_dir, 'cv.json'), cv_dict(report.cv_results))
        paths['cv_md'] = write_text(os.path.join(out_dir, 'cv.md'), cv_markdown(report.cv_results))

    logger.info("Wrote benchmark report to %s", out_dir)
    return paths
