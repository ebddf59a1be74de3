"""Multinomial logistic regression: softmax link, L2-penalised
cross-entropy loss, and a limited-memory quasi-Newton fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ARMIJO_C1 = 1e-4
_ARMIJO_CONTRACTION = 0.5
_MIN_STEP = 1e-20


@dataclass(frozen=True)
class LogRegConfig:
    """Fit hyperparameters.

    l2_strength penalises every weight except the bias column; tol is the
    max-norm gradient threshold that stops the optimiser.
    """

    l2_strength: float = 1.0
    max_iter: int = 200
    tol: float = 1e-6
    history: int = 10

    def __post_init__(self):
        if self.l2_strength < 0:
            raise ValueError("l2_strength must be non-negative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.history < 1:
            raise ValueError("history must be at least 1")


@dataclass(eq=False)
class LogRegModel:
    """Fitted weights: one row per class, bias in the last column."""

    weights: np.ndarray
    n_classes: int
    n_features: int
    fitted: bool = True
    iterations_used: int = 0
    final_loss: float = float("nan")


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax of a single logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _augment(X: np.ndarray) -> np.ndarray:
    """Append the constant bias column."""
    return np.hstack((X, np.ones((X.shape[0], 1))))


def _log_probs(W: np.ndarray, X_aug: np.ndarray) -> np.ndarray:
    logits = X_aug @ W.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_gradient(W, X_aug, y, l2_strength: float) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood with L2 penalty, and its exact gradient.

    loss = -(1/n) sum_i log p(y_i | x_i) + l2/(2n) * ||W without bias column||^2

    Args:
        W: weight matrix, shape (K, d+1), bias last.
        X_aug: augmented features, shape (n, d+1), last column all ones.
        y: class codes in [0, K).
        l2_strength: penalty coefficient, bias excluded.

    Returns:
        (loss, gradient) with gradient.shape == W.shape.
    """
    W = np.asarray(W, dtype=np.float64)
    X_aug = np.asarray(X_aug, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if W.ndim != 2 or X_aug.ndim != 2 or W.shape[1] != X_aug.shape[1]:
        raise ValueError("W and X_aug must agree on the augmented feature count")
    n = X_aug.shape[0]
    if len(y) != n:
        raise ValueError("y length must match the row count of X_aug")
    if n == 0:
        raise ValueError("cannot evaluate the loss on zero rows")
    k = W.shape[0]
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"class codes must lie in [0, {k})")

    log_p = _log_probs(W, X_aug)
    nll = -log_p[np.arange(n), y].mean()
    penalty = l2_strength / (2.0 * n) * float((W[:, :-1] ** 2).sum())
    loss = nll + penalty

    probs = np.exp(log_p)
    probs[np.arange(n), y] -= 1.0
    grad = probs.T @ X_aug / n
    grad[:, :-1] += (l2_strength / n) * W[:, :-1]
    return float(loss), grad


def _two_loop_direction(grad: np.ndarray, pairs: list) -> np.ndarray:
    """L-BFGS two-loop recursion; returns the descent direction -H*grad."""
    q = grad.ravel().copy()
    alphas = []
    for s, yv, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * yv
    if pairs:
        s, yv, _ = pairs[-1]
        q *= np.dot(s, yv) / np.dot(yv, yv)
    for (s, yv, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(yv, q)
        q += (a - b) * s
    return -q.reshape(grad.shape)


def fit(X, y, config: LogRegConfig | None = None,
        n_classes: int | None = None) -> LogRegModel:
    """Fit multinomial weights by L-BFGS with Armijo backtracking.

    Weights start at zero (initial loss is exactly ln K). Each iteration
    builds a quasi-Newton direction from up to ``history`` curvature pairs,
    backtracks the step by halving until the sufficient-decrease condition
    holds, and skips storing any pair whose curvature is not positive. When
    no stored pair yields a descent direction the step falls back to plain
    gradient descent. The whole procedure is deterministic: a fixed
    (X, y, config) always produces bit-identical weights.

    Args:
        X: finite feature matrix, n rows.
        y: class codes; together with n_classes they must cover [0, K).
        config: hyperparameters, defaults to LogRegConfig().
        n_classes: fixes K explicitly; inferred as max(y) + 1 when omitted.

    Returns:
        LogRegModel with iterations_used and final_loss recorded.
    """
    cfg = config or LogRegConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot fit on an empty matrix")
    if len(y) != n:
        raise ValueError("X and y must have the same number of rows")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    k = int(n_classes) if n_classes is not None else int(y.max()) + 1
    if k < 2:
        raise ValueError("need at least 2 classes")
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"class codes must lie in [0, {k})")
    if n < k:
        raise ValueError("need at least as many rows as classes")

    X_aug = _augment(X)
    W = np.zeros((k, d + 1))
    loss, grad = loss_and_gradient(W, X_aug, y, cfg.l2_strength)
    pairs: list = []
    iterations = 0

    while iterations < cfg.max_iter and np.abs(grad).max() >= cfg.tol:
        direction = _two_loop_direction(grad, pairs)
        slope = float(np.vdot(grad, direction))
        if slope >= 0.0:
            direction = -grad
            slope = float(np.vdot(grad, direction))

        step = 1.0
        while step > _MIN_STEP:
            W_new = W + step * direction
            new_loss, new_grad = loss_and_gradient(W_new, X_aug, y, cfg.l2_strength)
            if new_loss <= loss + _ARMIJO_C1 * step * slope:
                break
            step *= _ARMIJO_CONTRACTION
        else:
            break  # no decreasing step exists; numerically converged

        s = (W_new - W).ravel()
        yv = (new_grad - grad).ravel()
        curvature = float(np.dot(s, yv))
        if curvature > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
            pairs.append((s, yv, 1.0 / curvature))
            if len(pairs) > cfg.history:
                pairs.pop(0)

        W, loss, grad = W_new, new_loss, new_grad
        iterations += 1

    return LogRegModel(weights=W, n_classes=k, n_features=d,
                       iterations_used=iterations, final_loss=float(loss))


def predict_proba(model: LogRegModel, X) -> np.ndarray:
    """Class probabilities, one row per input row, rows summing to 1."""
    if not model.fitted:
        raise ValueError("model is not fitted")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected a matrix with {model.n_features} columns")
    return np.exp(_log_probs(model.weights, _augment(X)))


def predict(model: LogRegModel, X) -> np.ndarray:
    """Most probable class code per row; ties resolve to the lowest code."""
    if not model.fitted:
        raise ValueError("model is not fitted")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected a matrix with {model.n_features} columns")
    logits = _augment(X) @ model.weights.T
    return np.argmax(logits, axis=1).astype(np.int64)
