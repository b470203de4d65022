"""One-vs-rest linear classifiers with an L2-regularized squared hinge loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput


@dataclass(frozen=True)
class LabeledDescriptorSet:
    descriptors: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.descriptors, dtype=np.float64))
        y = np.asarray(self.labels).ravel()
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} descriptors but {y.shape[0]} labels")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise InvalidInput("labels must be integers")
            y = y.astype(np.int64)
        if y.size and y.min() < 0:
            raise InvalidInput("labels must be non-negative")
        object.__setattr__(self, "descriptors", X)
        object.__setattr__(self, "labels", y)

    @property
    def num_classes(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0


@dataclass(frozen=True)
class LinearOVRModel:
    weights: np.ndarray  # num_classes x D
    bias: np.ndarray     # num_classes
    iterations: tuple    # per-class iteration counts

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.shape[1]:
            raise DimensionMismatch(
                f"descriptors have dimension {X.shape[1]}, model expects {self.weights.shape[1]}"
            )
        return X @ self.weights.T + self.bias


def _objective(w, b, X, y, C):
    margin = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return 0.5 * w @ w + C * margin @ margin


def _fit_binary(X, y, C, tol, max_iter):
    """Minimize 0.5||w||^2 + C sum max(0, 1 - y(w.x + b))^2 (bias unregularized)
    by Nesterov-accelerated gradient descent with adaptive restart."""
    m, D = X.shape
    Xb = np.hstack([X, np.ones((m, 1))])
    # gradient Lipschitz constant: 1 + 2C * sigma_max([X 1])^2
    L = 1.0 + 2.0 * C * np.linalg.norm(Xb, 2) ** 2
    step = 1.0 / L
    reg = np.ones(D + 1)
    reg[-1] = 0.0

    def obj_grad(theta):
        viol = np.maximum(0.0, 1.0 - y * (Xb @ theta))
        f = 0.5 * (theta[:D] @ theta[:D]) + C * viol @ viol
        g = reg * theta - 2.0 * C * Xb.T @ (y * viol)
        return f, g

    theta = np.zeros(D + 1)
    z = theta.copy()
    t = 1.0
    f_prev, _ = obj_grad(theta)
    for it in range(1, max_iter + 1):
        _, g = obj_grad(z)
        theta_new = z - step * g
        f_new, _ = obj_grad(theta_new)
        if f_new > f_prev:
            # momentum overshot: restart from a plain gradient step
            t = 1.0
            _, g = obj_grad(theta)
            theta_new = theta - step * g
            f_new, _ = obj_grad(theta_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = theta_new + ((t - 1.0) / t_new) * (theta_new - theta)
        done = abs(f_prev - f_new) <= tol * max(abs(f_new), 1e-300)
        theta, t, f_prev = theta_new, t_new, f_new
        if done:
            return theta[:D], theta[D], it
    return theta[:D], theta[D], max_iter


def train_ovr_linear(train: LabeledDescriptorSet, reg_c: float = 1.0, seed: int = 0,
                     tol: float = 1e-6, max_iter: int = 20000) -> LinearOVRModel:
    """Fit one squared-hinge linear classifier per class.

    Training is deterministic: the solver starts from zero and visits the
    data in a fixed order. ``seed`` is accepted for interface stability and
    recorded nowhere.
    """
    del seed
    if reg_c <= 0:
        raise ValueError(f"reg_c must be positive, got {reg_c}")
    X, y = train.descriptors, train.labels
    k = train.num_classes
    present = np.unique(y)
    if present.size < 2:
        raise InvalidInput("training set needs at least two classes")
    if present.size != k:
        missing = sorted(set(range(k)) - set(present.tolist()))
        raise InvalidInput(f"classes without training examples: {missing}")
    W = np.zeros((k, X.shape[1]))
    b = np.zeros(k)
    iters = []
    for c in range(k):
        yc = np.where(y == c, 1.0, -1.0)
        W[c], b[c], it = _fit_binary(X, yc, reg_c, tol, max_iter)
        iters.append(it)
    return LinearOVRModel(W, b, tuple(iters))


def predict(model: LinearOVRModel, descriptors) -> np.ndarray:
    """Argmax of the per-class scores; np.argmax resolves ties to the smaller index."""
    return np.argmax(model.decision_function(descriptors), axis=1)


def accuracy_report(y_true, y_pred, num_classes=None):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    k = num_classes or int(max(y_true.max(), y_pred.max())) + 1
    per_class = {}
    for c in range(k):
        mask = y_true == c
        if mask.any():
            per_class[c] = float(np.mean(y_pred[mask] == c))
    return {
        "accuracy": float(np.mean(y_true == y_pred)),
        "mean_class_accuracy": float(np.mean(list(per_class.values()))),
        "per_class": per_class,
    }
