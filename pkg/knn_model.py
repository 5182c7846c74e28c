#!/usr/bin/env python3
"""
K-Nearest Neighbors
Euclidean majority-vote classifier over standardized features
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)

QUERY_CHUNK = 1024


@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.k > len(self.X):
            raise ValueError(f"k={self.k} exceeds training size {len(self.X)}")

    def neighbors(self, Q: np.ndarray) -> np.ndarray:
        """
        Indices of the k nearest training rows per query, nearest first

        Equal distances keep the lower training index first.
        """
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        out = np.empty((len(Q), self.k), dtype=int)
        for start in range(0, len(Q), QUERY_CHUNK):
            distances = cdist(Q[start:start + QUERY_CHUNK], self.X, metric='euclidean')
            out[start:start + QUERY_CHUNK] = np.argsort(distances, axis=1, kind='stable')[:, :self.k]
        return out

    def predict(self, Q: np.ndarray) -> np.ndarray:
        """
        Majority vote of the k neighbors

        A vote tie goes to the class of the nearest neighbor whose class is
        among the tied ones.
        """
        neighbor_labels = self.y[self.neighbors(Q)]
        predictions = np.empty(len(neighbor_labels), dtype=int)
        for row, labels in enumerate(neighbor_labels):
            counts = np.bincount(labels, minlength=self.n_classes)
            tied = counts == counts.max()
            predictions[row] = next(label for label in labels if tied[label])
        return predictions


def train_knn(X: np.ndarray, y: np.ndarray, k: int = 5, n_classes: Optional[int] = None) -> KnnModel:
    """
    Store the (already scaled) training set

    Raises:
        ValueError: empty training set or k > n
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    model = KnnModel(X=X.copy(), y=y.copy(), n_classes=n_classes, k=k)
    logger.info("Stored %d training points for %d-NN", len(X), k)
    return model


def predict_knn(model: KnnModel, Q: np.ndarray) -> np.ndarray:
    return model.predict(Q)
