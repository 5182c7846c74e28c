#!/usr/bin/env python3
"""
Correlation Analysis
Pearson correlation matrix over the account features and per-class descriptive statistics
"""
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from account_records import FEATURE_NAMES, LabeledExample, UserClass
from report_io import markdown_table, write_text

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 5


def _centered(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr - arr.mean()


def pearson(x: Sequence[float], y: Sequence[float], warn: bool = True) -> float:
    """
    Pearson product-moment correlation

    A zero-variance series has no defined correlation; 0.0 is returned
    instead of NaN so downstream reports stay finite.

    Raises:
        ValueError: lengths differ or fewer than two observations
    """
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} != {len(y)}")
    if len(x) < 2:
        raise ValueError(f"need at least 2 observations, got {len(x)}")

    # ptp, not the centered sum of squares: mean() of a constant 0.1 column leaves rounding residue
    if np.ptp(np.asarray(x, dtype=float)) == 0 or np.ptp(np.asarray(y, dtype=float)) == 0:
        if warn:
            logger.warning("Zero-variance series in Pearson correlation; returning 0")
        return 0.0
    dx = _centered(x)
    dy = _centered(y)
    denom = float(np.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy))))
    if denom == 0.0:
        return 0.0
    r = float(np.dot(dx, dy)) / denom
    return min(1.0, max(-1.0, r))


@dataclass
class CorrelationMatrix:
    feature_names: Tuple[str, ...]
    values: np.ndarray

    def top_pairs(self, k: int = DEFAULT_TOP_K) -> List[Tuple[str, str, float]]:
        """Off-diagonal pairs with the largest |r|, ties in row-major order"""
        n = len(self.feature_names)
        pairs = [(self.feature_names[i], self.feature_names[j], float(self.values[i, j]))
                 for i in range(n) for j in range(i + 1, n)]
        ranked = sorted(enumerate(pairs), key=lambda item: (-abs(item[1][2]), item[0]))
        return [pair for _, pair in ranked[:k]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=list(self.feature_names), columns=list(self.feature_names))

    def to_markdown(self) -> str:
        header = [''] + list(self.feature_names)
        rows = [[name] + [f"{v:.2f}" for v in self.values[i]] for i, name in enumerate(self.feature_names)]
        return markdown_table(header, rows)


def correlation_matrix(examples: Sequence[LabeledExample]) -> CorrelationMatrix:
    """
    Pairwise Pearson correlations over the canonical feature order

    Raises:
        ValueError: fewer than two examples
    """
    if len(examples) < 2:
        raise ValueError(f"need at least 2 examples, got {len(examples)}")

    X = np.vstack([ex.features.as_array() for ex in examples])
    n = X.shape[1]
    varying = np.ptp(X, axis=0) > 0
    constant = [FEATURE_NAMES[j] for j in range(n) if not varying[j]]
    if constant:
        logger.warning("Constant features get r = 0 against every other feature: %s", ', '.join(constant))

    values = np.zeros((n, n))
    idx = np.flatnonzero(varying)
    if len(idx) >= 2:
        sub = np.clip(np.nan_to_num(np.corrcoef(X[:, idx], rowvar=False)), -1.0, 1.0)
        values[np.ix_(idx, idx)] = sub
    # exact symmetry and unit diagonal
    upper = np.triu(values, k=1)
    values = upper + upper.T + np.eye(n)
    return CorrelationMatrix(feature_names=FEATURE_NAMES, values=values)


def class_summary(examples: Sequence[LabeledExample]) -> pd.DataFrame:
    """
    Mean/median/std (population) of every feature per class

    Returns:
        Long-format frame with columns class, feature, mean, median, std,
        ordered by class index then canonical feature order
    """
    if not examples:
        raise ValueError("cannot summarize an empty dataset")

    frame = pd.DataFrame([ex.features.as_array() for ex in examples], columns=list(FEATURE_NAMES))
    frame['class_index'] = [int(ex.label) for ex in examples]

    rows = []
    for class_index, group in frame.groupby('class_index', sort=True):
        for name in FEATURE_NAMES:
            column = group[name].to_numpy()
            rows.append({
                'class': UserClass(class_index).token,
                'feature': name,
                'mean': float(np.mean(column)),
                'median': float(np.median(column)),
                'std': float(np.std(column)),
            })
    return pd.DataFrame(rows, columns=['class', 'feature', 'mean', 'median', 'std'])


def class_means(summary: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    """{feature: {class token: mean}} view of a class summary"""
    result: Dict[str, Dict[str, float]] = {}
    for row in summary.itertuples(index=False):
        result.setdefault(row.feature, {})[row[0]] = row.mean
    return result


def summary_markdown(summary: pd.DataFrame) -> str:
    """Wide table: one row per class, mean (median) per feature"""
    header = ['class'] + list(FEATURE_NAMES)
    rows = []
    for token, group in summary.groupby('class', sort=False):
        cells = {r.feature: f"{r.mean:.3f} ({r.median:.3f})" for r in group.itertuples(index=False)}
        rows.append([token] + [cells[name] for name in FEATURE_NAMES])
    return markdown_table(header, rows)


def write_correlation_outputs(examples: Sequence[LabeledExample], out_dir: str,
                              top_k: int = DEFAULT_TOP_K) -> Dict[str, str]:
    """
    Write correlation.csv/.md, top_pairs.csv and class_summary.csv/.md

    Returns:
        Mapping of output kind to path
    """
    os.makedirs(out_dir, exist_ok=True)
    matrix = correlation_matrix(examples)
    summary = class_summary(examples)

    paths = {
        'correlation_csv': os.path.join(out_dir, 'correlation.csv'),
        'correlation_md': os.path.join(out_dir, 'correlation.md'),
        'top_pairs_csv': os.path.join(out_dir, 'top_pairs.csv'),
        'summary_csv': os.path.join(out_dir, 'class_summary.csv'),
        'summary_md': os.path.join(out_dir, 'class_summary.md'),
    }

    frame = pd.DataFrame(matrix.values, columns=list(matrix.feature_names))
    frame.to_csv(paths['correlation_csv'], index=False, float_format='%.6f', lineterminator='\n')
    write_text(paths['correlation_md'], "# Pearson correlation\n\n" + matrix.to_markdown())

    pairs = pd.DataFrame(matrix.top_pairs(top_k), columns=['feature_a', 'feature_b', 'r'])
    pairs.to_csv(paths['top_pairs_csv'], index=False, float_format='%.6f', lineterminator='\n')

    summary.to_csv(paths['summary_csv'], index=False, float_format='%.6f', lineterminator='\n')
    write_text(paths['summary_md'], "# Per-class feature summary: mean (median)\n\n" + summary_markdown(summary))

    logger.info("Wrote correlation outputs for %d examples to %s", len(examples), out_dir)
    return paths
