#!/usr/bin/env python3
"""
Model Pipeline
Feature scaling, algorithm dispatch, hyperparameters and versioned model files
"""
import logging
from dataclasses import asdict, dataclass, fields
from typing import Dict, Optional, Sequence, Tuple, Union

import joblib
import numpy as np

from account_records import LabeledExample, Scheme, examples_to_matrix, feature_columns
from knn_model import KnnModel, train_knn
from svm_smo import KernelSpec, SvmModel, train_svm
from tree_models import (DecisionTreeModel, ForestParams, RandomForestModel, TreeParams,
                         train_decision_tree, train_random_forest)

logger = logging.getLogger(__name__)

MODEL_FORMAT = 'fakescope-model'
MODEL_VERSION = 1

# Report row order
ALGORITHMS: Dict[str, str] = {
    'rf': 'Random forest',
    'knn': 'KNN',
    'svm-poly': 'SVM (polynomial)',
    'svm-rbf': 'SVM (RBF)',
    'dt': 'Decision tree',
}

SCALED_ALGORITHMS = ('knn', 'svm-poly', 'svm-rbf')


class TrainingError(RuntimeError):
    """A model could not be trained on the given data"""


class ModelFormatError(ValueError):
    """Model file is unreadable or not a model container"""


class ModelVersionError(ModelFormatError):
    pass


def parse_algorithms(value: str) -> Tuple[str, ...]:
    """'all' or a comma-separated list, returned in report order"""
    if value.strip().lower() == 'all':
        return tuple(ALGORITHMS)
    requested = [v.strip().lower() for v in value.split(',') if v.strip()]
    unknown = [v for v in requested if v not in ALGORITHMS]
    if unknown or not requested:
        raise ValueError(f"unknown algorithm(s) {unknown or [value]} (expected 'all' or some of: {', '.join(ALGORITHMS)})")
    return tuple(a for a in ALGORITHMS if a in requested)


@dataclass
class HyperParams:
    """Hyperparameters of every algorithm; each algorithm reads its own subset"""
    n_trees: int = 100
    features_per_split: Optional[int] = None
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    bootstrap: bool = True
    k: int = 5
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 20
    degree: int = 3
    gamma: Optional[float] = None
    coef0: float = 1.0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")
        if self.n_jobs == 0:
            raise ValueError("n_jobs must be non-zero (negative counts back from the CPU total)")

    def forest_params(self) -> ForestParams:
        return ForestParams(n_trees=self.n_trees, features_per_split=self.features_per_split,
                            max_depth=self.max_depth, min_samples_split=self.min_samples_split,
                            bootstrap=self.bootstrap)

    def tree_params(self) -> TreeParams:
        return TreeParams(max_depth=self.max_depth, min_samples_split=self.min_samples_split)

    def kernel(self, algorithm: str) -> KernelSpec:
        kind = 'poly' if algorithm == 'svm-poly' else 'rbf'
        return KernelSpec(kind=kind, degree=self.degree, gamma=self.gamma, coef0=self.coef0)

    def to_dict(self) -> Dict:
        return asdict(self)


def hyperparams_from_dict(config_dict: Dict) -> HyperParams:
    """Create HyperParams from a dictionary; unknown keys are rejected"""
    known = {f.name for f in fields(HyperParams)}
    unknown = sorted(set(config_dict) - known)
    if unknown:
        raise ValueError(f"unknown hyperparameter(s): {', '.join(unknown)}")
    return HyperParams(**config_dict)


@dataclass
class StandardScaler:
    """Per-feature z-score fitted on training data (population std)"""
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.mean):
            raise ValueError(f"expected {len(self.mean)} columns, got shape {X.shape}")
        scaled = np.zeros_like(X)
        keep = ~self.constant
        scaled[:, keep] = (X[:, keep] - self.mean[keep]) / self.std[keep]
        return scaled


def fit_scaler(X: np.ndarray) -> StandardScaler:
    """
    Raises:
        ValueError: empty matrix
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    constant = X.max(axis=0) == X.min(axis=0)
    return StandardScaler(mean=X.mean(axis=0), std=X.std(axis=0), constant=constant)


def apply_scaler(scaler: StandardScaler, X: np.ndarray) -> np.ndarray:
    return scaler.transform(X)


Model = Union[RandomForestModel, DecisionTreeModel, KnnModel, SvmModel]


@dataclass
class TrainedPipeline:
    """Scaler (None for tree models) plus a trained model for one label scheme"""
    scheme: Scheme
    algorithm: str
    feature_set: str
    scaler: Optional[StandardScaler]
    model: Model
    seed: int
    params: HyperParams

    @property
    def labels(self) -> Tuple[str, ...]:
        return self.scheme.labels

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class indices for a matrix holding this pipeline's feature columns"""
        X = np.asarray(X, dtype=float)
        expected = len(feature_columns(self.feature_set))
        if X.ndim != 2 or X.shape[1] != expected:
            raise ValueError(f"expected {expected} feature columns for feature set '{self.feature_set}', got shape {X.shape}")
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return np.asarray(self.model.predict(X), dtype=int)

    def predict_examples(self, examples: Sequence[LabeledExample]) -> np.ndarray:
        X, _ = examples_to_matrix(examples, self.scheme, self.feature_set)
        return self.predict(X)


def train_pipeline(X: np.ndarray, y: np.ndarray, scheme: Scheme, algorithm: str,
                   params: Optional[HyperParams] = None, seed: int = 42, feature_set: str = 'all') -> TrainedPipeline:
    """
    Fit the scaler where the algorithm needs one, then train the model

    Args:
        X: Training matrix with the columns of `feature_set`
        y: Class indices under `scheme`
        scheme: Label scheme
        algorithm: Key of ALGORITHMS
        params: Hyperparameters (defaults when None)
        seed: Master seed for the randomized algorithms
        feature_set: Name recorded so prediction selects the same columns

    Raises:
        TrainingError: empty data, missing classes, k > n or a numerical failure
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm '{algorithm}'")
    params = params or HyperParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(X) == 0:
        raise TrainingError("training set is empty")
    n_classes = scheme.n_classes

    scaler = fit_scaler(X) if algorithm in SCALED_ALGORITHMS else None
    Xt = scaler.transform(X) if scaler is not None else X

    try:
        if algorithm == 'rf':
            model = train_random_forest(Xt, y, params.forest_params(), seed=seed,
                                        n_classes=n_classes, n_jobs=params.n_jobs)
        elif algorithm == 'dt':
            model = train_decision_tree(Xt, y, params.tree_params(), seed=seed, n_classes=n_classes)
        elif algorithm == 'knn':
            model = train_knn(Xt, y, k=params.k, n_classes=n_classes)
        else:
            model = train_svm(Xt, y, n_classes, params.kernel(algorithm), C=params.C, tol=params.tol,
                              max_passes=params.max_passes, n_jobs=params.n_jobs)
    except ValueError as e:
        raise TrainingError(f"{ALGORITHMS[algorithm]} training failed: {e}") from e

    logger.info("Trained %s for %s on %d examples", ALGORITHMS[algorithm], scheme.value, len(y))
    return TrainedPipeline(scheme=scheme, algorithm=algorithm, feature_set=feature_set,
                           scaler=scaler, model=model, seed=seed, params=params)


def train_from_examples(examples: Sequence[LabeledExample], scheme: Scheme, algorithm: str,
                        params: Optional[HyperParams] = None, seed: int = 42, feature_set: str = 'all') -> TrainedPipeline:
    X, y = examples_to_matrix(examples, scheme, feature_set)
    return train_pipeline(X, y, scheme, algorithm, params, seed, feature_set)


def save_model(pipeline: TrainedPipeline, path: str) -> str:
    """Write a versioned joblib container"""
    container = {'format': MODEL_FORMAT, 'version': MODEL_VERSION, 'pipeline': pipeline}
    joblib.dump(container, path)
    logger.info("Saved %s model to %s", pipeline.algorithm, path)
    return path


def load_model(path: str) -> TrainedPipeline:
    """
    Read a model container written by save_model

    Raises:
        ModelFormatError: unreadable, truncated or foreign file
        ModelVersionError: container version differs from MODEL_VERSION
    """
    try:
        container = joblib.load(path)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise ModelFormatError(f"cannot read model file {path}: {type(e).__name__}") from e

    if not isinstance(container, dict) or container.get('format') != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a {MODEL_FORMAT} file")
    version = container.get('version')
    if version != MODEL_VERSION:
        raise ModelVersionError(f"{path} has model version {version!r}, this build reads version {MODEL_VERSION}")
    pipeline = container.get('pipeline')
    if not isinstance(pipeline, TrainedPipeline):
        raise ModelFormatError(f"{path} holds no trained pipeline")
    return pipeline
