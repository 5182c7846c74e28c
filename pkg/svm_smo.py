#!/usr/bin/env python3
"""
SMO Support Vector Machine
Soft-margin kernel SVM trained by sequential minimal optimization, one-vs-rest for multi-class
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)

KERNELS = ('poly', 'rbf')

# Floor for the second derivative along the update direction
MIN_CURVATURE = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """
    Polynomial (gamma * <x, z> + coef0) ** degree or RBF exp(-gamma * |x - z|^2)

    gamma None means: 1/d for the polynomial kernel and
    1/(d * mean feature variance) for RBF, resolved on the training matrix.
    """
    kind: str = 'rbf'
    degree: int = 3
    gamma: Optional[float] = None
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel '{self.kind}' (expected one of: {', '.join(KERNELS)})")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")

    def resolve(self, X: np.ndarray) -> 'KernelSpec':
        """Fill in the default gamma from the training matrix"""
        if self.gamma is not None:
            return self
        d = X.shape[1]
        gamma = 1.0 / d
        if self.kind == 'rbf':
            mean_var = float(np.mean(np.var(X, axis=0)))
            if mean_var > 0:
                gamma = 1.0 / (d * mean_var)
        return KernelSpec(kind=self.kind, degree=self.degree, gamma=gamma, coef0=self.coef0)

    def matrix(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.gamma is None:
            raise ValueError("kernel gamma is unresolved")
        if self.kind == 'poly':
            K = (self.gamma * (A @ B.T) + self.coef0) ** self.degree
        else:
            K = np.exp(-self.gamma * cdist(A, B, metric='sqeuclidean'))
        if not np.all(np.isfinite(K)):
            raise ValueError(f"non-finite {self.kind} kernel value")
        return K


@dataclass
class BinaryMachine:
    """
    One trained soft-margin machine

    f(x) = sum_i dual_coef_i * K(sv_i, x) + b with dual_coef = alpha * y
    restricted to the support vectors.
    """
    kernel: KernelSpec
    C: float
    alpha: np.ndarray
    support: np.ndarray
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    b: float
    n_iter: int
    converged: bool
    objective_history: List[float] = field(default_factory=list)

    @property
    def n_support(self) -> int:
        return len(self.support)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_support == 0:
            return np.full(len(X), self.b)
        return self.kernel.matrix(X, self.support_vectors) @ self.dual_coef + self.b


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij"""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def _working_sets(alpha: np.ndarray, y: np.ndarray, C: float):
    positive = y > 0
    up = (positive & (alpha < C)) | (~positive & (alpha > 0))
    low = (positive & (alpha > 0)) | (~positive & (alpha < C))
    return up, low


def _extreme_pair(F: np.ndarray, up: np.ndarray, low: np.ndarray):
    up_idx = np.flatnonzero(up)
    low_idx = np.flatnonzero(low)
    i = int(up_idx[np.argmax(F[up_idx])])
    j = int(low_idx[np.argmin(F[low_idx])])
    return i, j


def train_svm_binary(X: np.ndarray, y: np.ndarray, kernel: Optional[KernelSpec] = None, C: float = 1.0,
                     tol: float = 1e-3, max_passes: int = 20, debug: bool = False) -> BinaryMachine:
    """
    Solve the soft-margin dual with SMO

    Each step updates the maximal violating pair (i from the set that can
    move up, j from the set that can move down) by an exact line search
    clipped to the box [0, C]. Training stops once the violation gap
    max F(up) - min F(low) is at most tol, or after max_passes * n steps.
    The bias is the midpoint of that gap, so every KKT residual ends up at
    most half the final gap.

    Args:
        X: Training matrix (already scaled)
        y: Labels in {-1, +1}; both must be present
        kernel: Kernel spec; gamma is resolved on X when unset
        C: Box constraint
        tol: Stopping gap
        max_passes: Step budget in multiples of n
        debug: Record the dual objective after every step and assert it never decreases

    Raises:
        ValueError: single-class input, bad labels or non-finite kernel values
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) != len(y) or len(X) == 0:
        raise ValueError("X and y must be non-empty and of equal length")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("both classes must be present to train a binary machine")
    if not C > 0:
        raise ValueError(f"C must be > 0, got {C}")

    kernel = (kernel or KernelSpec()).resolve(X)
    K = kernel.matrix(X, X)
    n = len(y)
    alpha = np.zeros(n)
    s = np.zeros(n)  # K @ (alpha * y), kept incrementally
    history = [0.0] if debug else []

    converged = False
    n_iter = 0
    for _ in range(max_passes * n):
        up, low = _working_sets(alpha, y, C)
        if not up.any() or not low.any():
            converged = True
            break
        F = y - s
        i, j = _extreme_pair(F, up, low)
        gap = F[i] - F[j]
        if gap <= tol:
            converged = True
            break

        eta = max(K[i, i] + K[j, j] - 2.0 * K[i, j], MIN_CURVATURE)
        bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
        bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(gap / eta, bound_i, bound_j)

        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        if step == bound_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if step == bound_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        alpha[[i, j]] = np.clip(alpha[[i, j]], 0.0, C)
        s += step * (K[:, i] - K[:, j])
        n_iter += 1

        if debug:
            w = dual_objective(alpha, y, K)
            assert w >= history[-1] - 1e-9 * max(1.0, abs(history[-1])), \
                f"dual objective decreased at step {n_iter}: {history[-1]} -> {w}"
            history.append(w)
    else:
        logger.warning("SMO stopped after %d steps without reaching tol=%g", n_iter, tol)

    # recompute from scratch to drop accumulated rounding before fixing b
    s = K @ (alpha * y)
    F = y - s
    up, low = _working_sets(alpha, y, C)
    if up.any() and low.any():
        i, j = _extreme_pair(F, up, low)
        b = (F[i] + F[j]) / 2.0
    else:
        b = float(np.mean(F))

    support = np.flatnonzero(alpha > 0)
    logger.debug("SMO finished: %d steps, %d support vectors, b=%.6f", n_iter, len(support), b)
    return BinaryMachine(
        kernel=kernel,
        C=C,
        alpha=alpha,
        support=support,
        support_vectors=X[support].copy(),
        dual_coef=(alpha * y)[support],
        b=float(b),
        n_iter=n_iter,
        converged=converged,
        objective_history=history,
    )


def kkt_violations(machine: BinaryMachine, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Per-sample KKT residuals of a machine on its own training data

    alpha = 0 requires y f >= 1, alpha = C requires y f <= 1, and a free
    alpha requires y f = 1; the residual is the amount by which each
    condition fails.
    """
    y = np.asarray(y, dtype=float)
    margin = y * machine.decision_function(X)
    at_zero = machine.alpha <= 0
    at_c = machine.alpha >= machine.C
    return np.where(at_zero, np.maximum(0.0, 1.0 - margin),
                    np.where(at_c, np.maximum(0.0, margin - 1.0), np.abs(margin - 1.0)))


@dataclass
class SvmModel:
    """
    One-vs-rest machines; machine c separates `positive_classes[c]` from the rest

    With two classes there is a single machine whose positive class is 1.
    """
    machines: List[BinaryMachine]
    positive_classes: List[int]
    n_classes: int
    kernel: KernelSpec
    C: float

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([m.decision_function(X) for m in self.machines])

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = self.decision_values(X)
        if self.n_classes == 2:
            return (scores[:, 0] > 0).astype(int)
        return np.asarray(self.positive_classes)[scores.argmax(axis=1)]


def train_svm(X: np.ndarray, y: np.ndarray, n_classes: int, kernel: Optional[KernelSpec] = None,
              C: float = 1.0, tol: float = 1e-3, max_passes: int = 20, n_jobs: int = 1) -> SvmModel:
    """
    Train one binary machine per class (one for two classes)

    Raises:
        ValueError: a class of the scheme is absent from y
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    missing = sorted(set(range(n_classes)) - set(np.unique(y).tolist()))
    if missing:
        raise ValueError(f"classes missing from training data: {missing}")

    kernel = (kernel or KernelSpec()).resolve(X)
    positives = [1] if n_classes == 2 else list(range(n_classes))
    targets = [np.where(y == c, 1.0, -1.0) for c in positives]

    if n_jobs == 1:
        machines = [train_svm_binary(X, t, kernel, C, tol, max_passes) for t in targets]
    else:
        machines = Parallel(n_jobs=n_jobs)(
            delayed(train_svm_binary)(X, t, kernel, C, tol, max_passes) for t in targets)

    logger.info("Trained %d SVM machine(s), %s kernel, gamma=%.6g", len(machines), kernel.kind, kernel.gamma)
    return SvmModel(machines=machines, positive_classes=positives, n_classes=n_classes, kernel=kernel, C=C)


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    return model.decision_values(X)


def predict_svm(model: SvmModel, X: np.ndarray) -> np.ndarray:
    return model.predict(X)
