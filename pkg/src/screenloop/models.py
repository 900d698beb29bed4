"""Linear learners backing the screening loop.

Two models, both trained from scratch so runs are reproducible to the bit:

* a class-weighted linear max-margin classifier (L2-regularized hinge
  loss, C=1) trained by deterministic subgradient descent on the primal,
* a one-dimensional logistic regression fit by damped Newton iteration,
  used to turn decision values into probabilities for recall estimation.

An "epoch" of the subgradient solver is one full-batch step over all
examples (summed in input order, so callers pass rows sorted by doc_id);
the learning rate at epoch t is 1/(lambda*t) with lambda = 1/(C*n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.special import expit

DEFAULT_C = 1.0
DEFAULT_EPOCHS = 200
WEIGHT_CLIP = 1e6  # keeps perfectly separable fits finite


class TrainingError(Exception):
    """Raised when a training set cannot produce a model."""


@dataclass(frozen=True)
class ModelSnapshot:
    weights: np.ndarray  # dense, length = vocabulary size
    bias: float
    n_pos: int
    n_neg: int
    undersampled: bool = False


@dataclass(frozen=True)
class LogisticCurve:
    slope: float
    intercept: float

    def predict(self, d: np.ndarray) -> np.ndarray:
        """p(y=1 | decision value d)."""
        return expit(self.slope * np.asarray(d, dtype=np.float64) + self.intercept)


def class_weights(y: np.ndarray, balanced: bool) -> np.ndarray:
    """Per-example weights; balanced uses w_c = n_total / (2 * n_c)."""
    y = np.asarray(y)
    if not balanced:
        return np.ones(len(y))
    n = len(y)
    n_pos = int(np.sum(y > 0))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainingError(
            "training set is missing the "
            + ("positive" if n_pos == 0 else "negative")
            + " class"
        )
    w = np.empty(n)
    w[y > 0] = n / (2.0 * n_pos)
    w[y < 0] = n / (2.0 * n_neg)
    return w


def hinge_objective(
    w: np.ndarray,
    b: float,
    X: sparse.spmatrix,
    y: np.ndarray,
    sample_weight: np.ndarray,
    lam: float,
) -> float:
    """lam/2 ||w||^2 + (1/n) sum_i s_i max(0, 1 - y_i (w.x_i + b))."""
    margins = y * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * lam * float(w @ w) + float(sample_weight @ hinge) / X.shape[0]


def hinge_gradient(
    w: np.ndarray,
    b: float,
    X: sparse.spmatrix,
    y: np.ndarray,
    sample_weight: np.ndarray,
    lam: float,
) -> tuple[np.ndarray, float]:
    """Subgradient of hinge_objective at (w, b); hinge active where margin < 1."""
    margins = y * (X @ w + b)
    coef = np.where(margins < 1.0, sample_weight * y, 0.0)
    n = X.shape[0]
    grad_w = lam * w - (X.T @ coef) / n
    grad_b = -float(np.sum(coef)) / n
    return grad_w, grad_b


def train_svm(
    X: sparse.spmatrix,
    y: np.ndarray,
    balanced: bool = True,
    c: float = DEFAULT_C,
    epochs: int = DEFAULT_EPOCHS,
    undersampled: bool = False,
) -> ModelSnapshot:
    """Train the linear classifier; deterministic given (X, y) row order."""
    X = sparse.csr_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise ValueError("X and y row counts differ")
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y < 0))
    if n_pos == 0 or n_neg == 0:
        raise TrainingError(
            "training set is missing the "
            + ("positive" if n_pos == 0 else "negative")
            + " class"
        )
    sw = class_weights(y, balanced)
    n = X.shape[0]
    lam = 1.0 / (c * n)

    # Same update as hinge_gradient, with the transpose hoisted out of
    # the epoch loop.
    XT = X.T.tocsc()
    swy = sw * y
    w = np.zeros(X.shape[1])
    b = 0.0
    for t in range(1, epochs + 1):
        eta = 1.0 / (lam * t)
        margins = y * (X @ w + b)
        coef = np.where(margins < 1.0, swy, 0.0)
        w -= eta * (lam * w - (XT @ coef) / n)
        b -= eta * (-float(np.sum(coef)) / n)
        np.clip(w, -WEIGHT_CLIP, WEIGHT_CLIP, out=w)
        b = float(np.clip(b, -WEIGHT_CLIP, WEIGHT_CLIP))
    return ModelSnapshot(w, b, n_pos, n_neg, undersampled)


def decision(model: ModelSnapshot, X: sparse.spmatrix) -> np.ndarray:
    """w.x + b per row; positive values indicate predicted relevance."""
    if X.shape[1] != len(model.weights):
        raise ValueError(
            f"feature dimension {X.shape[1]} != model dimension {len(model.weights)}"
        )
    return np.asarray(X @ model.weights).ravel() + model.bias


def aggressive_undersample(
    model: ModelSnapshot,
    X: sparse.spmatrix,
    pos_rows: np.ndarray,
    neg_rows: np.ndarray,
    c: float = DEFAULT_C,
    epochs: int = DEFAULT_EPOCHS,
) -> ModelSnapshot:
    """Retrain unweighted on positives plus the most-negative negatives.

    Keeps the |pos| negative rows with the lowest decision values under
    ``model`` (ties by ascending row id); if there are at most |pos|
    negatives, all are kept.
    """
    pos_rows = np.asarray(pos_rows, dtype=np.int64)
    neg_rows = np.asarray(neg_rows, dtype=np.int64)
    if len(pos_rows) == 0 or len(neg_rows) == 0:
        raise TrainingError("undersampling needs both classes")
    if len(neg_rows) > len(pos_rows):
        values = decision(model, X[neg_rows])
        order = np.lexsort((neg_rows, values))  # primary: value, secondary: row id
        keep = neg_rows[order[: len(pos_rows)]]
    else:
        keep = neg_rows
    rows = np.concatenate([pos_rows, keep])
    labels = np.concatenate([np.ones(len(pos_rows)), -np.ones(len(keep))])
    idx = np.argsort(rows, kind="stable")
    return train_svm(
        X[rows[idx]], labels[idx], balanced=False, c=c, epochs=epochs, undersampled=True
    )


def fit_logistic_1d(
    points: "np.ndarray | list[tuple[float, float]]",
    l2_c: Optional[float] = 1.0,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> LogisticCurve:
    """Fit p(y=1|d) = sigmoid(slope*d + intercept) by damped Newton.

    Minimizes the negative log-likelihood plus slope^2/(2*l2_c); the
    intercept is never penalized.  The ridge term is the conventional
    logistic-regression default and is load-bearing here: decision values
    that linearly separate the labels would otherwise drive the
    unpenalized slope toward infinity, turning the curve into a step
    function that assigns zero probability to every near-boundary
    document.  Pass ``l2_c=None`` for the plain maximum-likelihood fit.

    Damped Newton: full step, halved until the objective does not
    increase; stops when the applied parameter change is below ``tol``.
    One-class inputs get the degenerate flat fit (slope 0, intercept at
    the clamped class rate) instead of an error, since early estimation
    rounds can be single-class.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least 2 (decision, label) points")
    d, y = pts[:, 0], pts[:, 1]
    mean_y = float(np.mean(y))
    if np.all(y == y[0]):
        p = min(max(mean_y, 1e-6), 1.0 - 1e-6)
        return LogisticCurve(0.0, float(np.log(p / (1.0 - p))))

    design = np.column_stack([d, np.ones_like(d)])
    ridge = 0.0 if l2_c is None else 1.0 / l2_c

    def objective(theta: np.ndarray) -> float:
        z = design @ theta
        return float(np.sum(np.logaddexp(0.0, z) - y * z)) + 0.5 * ridge * theta[0] ** 2

    theta = np.zeros(2)
    current = objective(theta)
    for _ in range(max_iter):
        z = design @ theta
        p = expit(z)
        grad = design.T @ (p - y)
        grad[0] += ridge * theta[0]
        weights = p * (1.0 - p)
        hess = design.T @ (design * weights[:, None]) + 1e-12 * np.eye(2)
        hess[0, 0] += ridge
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        alpha = 1.0
        candidate = theta - step
        value = objective(candidate)
        while value > current and alpha > 1e-10:
            alpha *= 0.5
            candidate = theta - alpha * step
            value = objective(candidate)
        moved = np.max(np.abs(theta - candidate))
        theta, current = candidate, value
        if moved < tol:
            break
    return LogisticCurve(float(theta[0]), float(theta[1]))
