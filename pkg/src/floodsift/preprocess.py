"""Min-max rescaling to a target range and seeded train/test row splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Knuth's MMIX linear congruential generator. The split must be reproducible
# from the seed alone, independent of any library RNG, so the recurrence is
# spelled out here: state' = (state * MULT + INC) mod 2^64.
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_MASK64 = (1 << 64) - 1


@dataclass(eq=False)
class Scaler:
    """Per-feature affine map sending observed [min, max] onto [newmin, newmax]."""

    mins: np.ndarray
    maxs: np.ndarray
    newmin: float = 0.0
    newmax: float = 1.0
    fitted: bool = True

    @property
    def n_features(self) -> int:
        return len(self.mins)

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of constant features (max equals min)."""
        return self.maxs == self.mins


def fit_scaler(X, newmin: float = 0.0, newmax: float = 1.0) -> Scaler:
    """Record per-feature extrema of X for later rescaling.

    Args:
        X: finite matrix with at least one row.
        newmin, newmax: target range, newmin < newmax.

    Returns:
        Fitted Scaler with exact column minima and maxima.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    if not newmin < newmax:
        raise ValueError("newmin must be strictly less than newmax")
    return Scaler(mins=X.min(axis=0), maxs=X.max(axis=0),
                  newmin=float(newmin), newmax=float(newmax))


def transform(X, scaler: Scaler) -> np.ndarray:
    """Apply x' = (x - min) / (max - min) * (newmax - newmin) + newmin.

    Values outside the fitted range extrapolate linearly; there is no
    clamping. Degenerate (constant) features map to newmin.
    """
    if not scaler.fitted:
        raise ValueError("scaler is not fitted")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != scaler.n_features:
        raise ValueError(
            f"expected a matrix with {scaler.n_features} columns"
        )
    span = scaler.maxs - scaler.mins
    safe_span = np.where(span == 0.0, 1.0, span)
    out = (X - scaler.mins) / safe_span * (scaler.newmax - scaler.newmin) + scaler.newmin
    out[:, span == 0.0] = scaler.newmin
    return out


@dataclass(frozen=True)
class SplitSpec:
    """Train fraction and shuffle seed for a reproducible row split."""

    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def shuffled_indices(n: int, seed: int) -> np.ndarray:
    """Deterministic permutation of range(n) from a 64-bit LCG.

    Fisher-Yates driven by the MMIX recurrence; swap index j for position i
    is (state >> 11) mod (i + 1). Documented so other implementations can
    reproduce the same permutation exactly.
    """
    state = seed & _MASK64
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        state = (state * _LCG_MULT + _LCG_INC) & _MASK64
        j = (state >> 11) % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return np.asarray(idx, dtype=np.int64)


def train_test_split(X, y, spec: SplitSpec | None = None):
    """Shuffle rows with the seeded permutation and cut at floor(n * fraction).

    Args:
        X: feature matrix, n rows.
        y: label vector of length n.
        spec: split fraction and seed; defaults to 80/20 with seed 0.

    Returns:
        (X_train, y_train, X_test, y_test); the two parts are disjoint and
        together cover every input row exactly once.
    """
    spec = spec or SplitSpec()
    X = np.asarray(X)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if len(y) != X.shape[0]:
        raise ValueError("X and y must have the same number of rows")
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    order = shuffled_indices(n, spec.seed)
    cut = int(math.floor(n * spec.train_fraction))
    train, test = order[:cut], order[cut:]
    return X[train], y[train], X[test], y[test]
