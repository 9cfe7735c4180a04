"""Binary attack classifiers trained from scratch.

Three learners over low-dimensional features (in practice the scalar
per-sample loss): full-batch gradient-descent logistic regression,
subgradient-descent linear SVM, and stage-wise boosted depth-1
threshold rules fit to logistic gradients. All are deterministic
functions of their training data and hyperparameters.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

ATTACKER_NAMES = ("logreg", "linear_svm", "boosted_stumps")

# Newton leaf values are clipped to this magnitude; standard guard
# against near-pure leaves blowing up the additive model.
_MAX_LEAF = 4.0


def _as_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _standardizer(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = x.mean(axis=0)
    sigma = x.std(axis=0)
    sigma = np.where(sigma < 1e-12, 1.0, sigma)
    return mu, sigma


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticRegressionAttacker:
    """Logistic regression by full-batch gradient descent.

    Features are z-scored with training-fold statistics; weights start
    at zero, so training is deterministic.
    """

    def __init__(self, iterations: int = 300, learning_rate: float = 0.5, regularization: float = 1e-4):
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.regularization = regularization
        self.w = None
        self.b = 0.0
        self.mu = None
        self.sigma = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "LogisticRegressionAttacker":
        x = _as_matrix(features)
        y = np.asarray(labels, dtype=np.float64)
        self.mu, self.sigma = _standardizer(x)
        x = (x - self.mu) / self.sigma
        n, d = x.shape
        w = np.zeros(d)
        b = 0.0
        for _ in range(self.iterations):
            p = _sigmoid(x @ w + b)
            err = p - y
            w -= self.learning_rate * (x.T @ err / n + self.regularization * w)
            b -= self.learning_rate * float(err.mean())
        self.w, self.b = w, b
        return self

    def decision(self, features: np.ndarray) -> np.ndarray:
        x = (_as_matrix(features) - self.mu) / self.sigma
        return x @ self.w + self.b

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision(features) > 0.0).astype(np.int64)


class LinearSvmAttacker:
    """L2-regularized hinge loss minimized by subgradient descent."""

    def __init__(self, iterations: int = 300, learning_rate: float = 0.1, regularization: float = 1e-3):
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.regularization = regularization
        self.w = None
        self.b = 0.0
        self.mu = None
        self.sigma = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "LinearSvmAttacker":
        x = _as_matrix(features)
        y = 2.0 * np.asarray(labels, dtype=np.float64) - 1.0
        self.mu, self.sigma = _standardizer(x)
        x = (x - self.mu) / self.sigma
        n, d = x.shape
        w = np.zeros(d)
        b = 0.0
        for _ in range(self.iterations):
            margin = y * (x @ w + b)
            active = margin < 1.0
            gw = self.regularization * w - (x[active].T @ y[active]) / n
            gb = -float(y[active].sum()) / n
            w -= self.learning_rate * gw
            b -= self.learning_rate * gb
        self.w, self.b = w, b
        return self

    def decision(self, features: np.ndarray) -> np.ndarray:
        x = (_as_matrix(features) - self.mu) / self.sigma
        return x @ self.w + self.b

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision(features) > 0.0).astype(np.int64)


def _fit_stump(x: np.ndarray, residual: np.ndarray, curvature: np.ndarray):
    """Best single-feature threshold split for the residuals.

    Chooses the (feature, threshold) minimizing the squared error of a
    two-constant fit, then sets leaf values by a Newton step
    sum(residual)/sum(curvature) per side. Returns
    (feature, threshold, left_value, right_value); a degenerate column
    set yields a constant stump.
    """
    n, d = x.shape
    best = None  # (gain, feature, threshold, left, right)
    total_r = residual.sum()
    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        rs = residual[order]
        hs = curvature[order]
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if valid.size == 0:
            continue
        cum_r = np.cumsum(rs)
        cum_h = np.cumsum(hs)
        left_r = cum_r[valid]
        right_r = total_r - left_r
        left_n = valid + 1.0
        right_n = n - left_n
        # SSE reduction of the two-constant fit vs a single constant
        gain = left_r**2 / left_n + right_r**2 / right_n
        k = int(np.argmax(gain))
        if best is None or gain[k] > best[0]:
            i = valid[k]
            left_h = cum_h[i]
            right_h = cum_h[-1] - left_h
            left_value = np.clip(left_r[k] / max(left_h, 1e-12), -_MAX_LEAF, _MAX_LEAF)
            right_value = np.clip(right_r[k] / max(right_h, 1e-12), -_MAX_LEAF, _MAX_LEAF)
            threshold = 0.5 * (xs[i] + xs[i + 1])
            best = (float(gain[k]), j, float(threshold), float(left_value), float(right_value))
    if best is None:
        value = float(np.clip(total_r / max(curvature.sum(), 1e-12), -_MAX_LEAF, _MAX_LEAF))
        return 0, -np.inf, value, value
    return best[1], best[2], best[3], best[4]


class BoostedStumpsAttacker:
    """Gradient boosting with depth-1 threshold rules on logistic loss.

    Each stage fits a stump to the current logistic residuals y - p and
    adds it with shrinkage; prediction thresholds the additive score at
    zero. On a scalar feature this captures everything deeper trees
    could.
    """

    def __init__(self, stump_count: int = 50, shrinkage: float = 0.3):
        self.stump_count = stump_count
        self.shrinkage = shrinkage
        self.base_score = 0.0
        self.stumps: list[tuple[int, float, float, float]] = []

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "BoostedStumpsAttacker":
        x = _as_matrix(features)
        y = np.asarray(labels, dtype=np.float64)
        rate = float(np.clip(y.mean(), 1e-9, 1.0 - 1e-9))
        self.base_score = float(np.log(rate / (1.0 - rate)))
        self.stumps = []
        score = np.full(x.shape[0], self.base_score)
        for _ in range(self.stump_count):
            p = _sigmoid(score)
            residual = y - p
            curvature = p * (1.0 - p)
            feature, threshold, left, right = _fit_stump(x, residual, curvature)
            self.stumps.append((feature, threshold, left, right))
            contrib = np.where(x[:, feature] <= threshold, left, right)
            score = score + self.shrinkage * contrib
        return self

    def decision(self, features: np.ndarray) -> np.ndarray:
        x = _as_matrix(features)
        score = np.full(x.shape[0], self.base_score)
        for feature, threshold, left, right in self.stumps:
            score = score + self.shrinkage * np.where(x[:, feature] <= threshold, left, right)
        return score

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision(features) > 0.0).astype(np.int64)


def make_attacker(name: str, *, iterations: int = 300, learning_rate: float = 0.2,
                  regularization: float = 1e-3, stump_count: int = 50, shrinkage: float = 0.3):
    if name == "logreg":
        return LogisticRegressionAttacker(iterations, learning_rate, regularization)
    if name == "linear_svm":
        return LinearSvmAttacker(iterations, learning_rate, regularization)
    if name == "boosted_stumps":
        return BoostedStumpsAttacker(stump_count, shrinkage)
    raise ConfigurationError(f"unknown attacker {name!r}")
