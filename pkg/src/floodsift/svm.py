"""RBF-kernel support vector machines: a sequential-minimal-optimisation
solver for the binary soft-margin dual, composed one-vs-one for multiclass."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

# Dense Gram matrices are cached up to this many rows per binary subproblem;
# larger subproblems recompute kernel rows on demand.
GRAM_CACHE_LIMIT = 8000

# An update smaller than this does not count as progress in the SMO sweep.
_MIN_ALPHA_STEP = 1e-10

# Updated alphas this close to 0 or C snap to the exact bound. Without the
# snap, float drift leaves residues like 1e-17 that make at-bound points
# look interior to the KKT checks, which then flag them forever.
_SNAP = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    """Soft-margin and solver parameters.

    gamma is either a positive kernel width or the string "scale", which
    resolves to 1 / (n_features * variance of all matrix entries) on the
    training matrix at fit time.
    """

    C: float = 1.0
    gamma: float | str = "scale"
    tol: float = 1e-3
    max_passes: int = 10
    max_iter: int | None = None  # sweep cap; defaults to 10 * n at fit time

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if isinstance(self.gamma, str):
            if self.gamma != "scale":
                raise ValueError("gamma must be a positive number or 'scale'")
        elif self.gamma <= 0:
            raise ValueError("gamma must be a positive number or 'scale'")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(eq=False)
class BinarySvm:
    """One trained binary machine: support vectors, their signed dual
    coefficients (alpha_i * y_i), the bias, and the class codes the +/-
    signs stand for."""

    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    class_pair: tuple[int, int]  # (code for sign -, code for sign +)
    gamma: float


@dataclass(eq=False)
class OvoSvmModel:
    """One binary machine per unordered class pair."""

    n_classes: int
    binaries: tuple[BinarySvm, ...]
    fitted: bool = True


def gamma_scale(X) -> float:
    """Kernel width 1 / (d * var), with var pooled over every matrix entry."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    var = float(X.var())
    if var == 0.0:
        raise ValueError("cannot derive gamma from a constant matrix")
    return 1.0 / (X.shape[1] * var)


def rbf_kernel(a, b, gamma: float) -> float:
    """exp(-gamma * ||a - b||^2) for two vectors of equal length."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be vectors of equal length")
    diff = a - b
    return float(np.exp(-gamma * np.dot(diff, diff)))


def _kernel_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """RBF kernel between every row of A and every row of B."""
    sq = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)  # guard tiny negatives from cancellation
    return np.exp(-gamma * sq)


class _SmoState:
    """Working state for one binary subproblem.

    The bias never enters the sweep logic: pair updates depend only on error
    differences, where it cancels, and violation checks compare each point's
    margin-bias candidate ``cand_i = y_i - f_i`` against the feasibility
    interval of the whole solution. A feasible bias must sit at or above
    every candidate in the "lower" set (free alphas, and at-bound alphas
    whose margin may only exceed 1) and at or below every candidate in the
    "upper" set; the solution is optimal at tolerance once
    max(lower) - min(upper) <= 2 tol. Checking violations against this
    interval instead of a running bias estimate keeps the flags sound: a
    flagged point always admits a partner with a genuinely improving step.
    """

    def __init__(self, X, y, C, gamma, tol):
        self.X = X
        self.y = y
        self.C = C
        self.gamma = gamma
        self.tol = tol
        n = len(y)
        self.alpha = np.zeros(n)
        # f[i] = sum_j alpha_j y_j K(i, j), maintained incrementally.
        self.f = np.zeros(n)
        self.gram = _kernel_matrix(X, X, gamma) if n <= GRAM_CACHE_LIMIT else None
        self._pos = y > 0.0
        self._extremes = None  # lazily computed (max lower cand, min upper cand)

    def kernel_row(self, i: int) -> np.ndarray:
        if self.gram is not None:
            return self.gram[i]
        return _kernel_matrix(self.X, self.X[i:i + 1], self.gamma).ravel()

    def _bound_masks(self):
        at_lo = self.alpha == 0.0
        at_hi = self.alpha == self.C
        free = ~at_lo & ~at_hi
        lower = free | (at_lo & self._pos) | (at_hi & ~self._pos)
        upper = free | (at_lo & ~self._pos) | (at_hi & self._pos)
        return lower, upper

    def interval(self) -> tuple[float, float]:
        """(max lower candidate, min upper candidate), cached between steps."""
        if self._extremes is None:
            cand = self.y - self.f
            lower, upper = self._bound_masks()
            b_lo = float(cand[lower].max()) if lower.any() else -np.inf
            b_hi = float(cand[upper].min()) if upper.any() else np.inf
            self._extremes = (b_lo, b_hi)
        return self._extremes

    def violates_kkt(self, i: int) -> bool:
        """True when point i obstructs the feasibility interval beyond 2 tol."""
        b_lo, b_hi = self.interval()
        cand_i = self.y[i] - self.f[i]
        in_lower, in_upper = self._membership(i)
        return (in_lower and cand_i > b_hi + 2.0 * self.tol) or \
               (in_upper and cand_i < b_lo - 2.0 * self.tol)

    def _membership(self, i: int) -> tuple[bool, bool]:
        a = self.alpha[i]
        pos = bool(self._pos[i])
        if a == 0.0:
            return (pos, not pos)
        if a == self.C:
            return (not pos, pos)
        return (True, True)

    def take_step(self, i: int, j: int) -> bool:
        """Joint optimisation of alphas i and j; True if either moved."""
        if i == j:
            return False
        alpha, y, C = self.alpha, self.y, self.C
        if y[i] != y[j]:
            low = max(0.0, alpha[j] - alpha[i])
            high = min(C, C + alpha[j] - alpha[i])
        else:
            low = max(0.0, alpha[i] + alpha[j] - C)
            high = min(C, alpha[i] + alpha[j])
        if high - low < _MIN_ALPHA_STEP:
            return False

        row_i = self.kernel_row(i)
        row_j = self.kernel_row(j)
        eta = 2.0 * row_i[j] - row_i[i] - row_j[j]
        if eta >= 0.0:
            return False  # only duplicate points produce this with an RBF kernel

        # The bias cancels in the error difference, so errors are taken
        # without it: e = f - y.
        e_diff = (self.f[i] - y[i]) - (self.f[j] - y[j])
        a_j = alpha[j] - y[j] * e_diff / eta
        a_j = min(max(a_j, low), high)
        if a_j < _SNAP:
            a_j = 0.0
        elif a_j > C - _SNAP:
            a_j = C
        if abs(a_j - alpha[j]) < _MIN_ALPHA_STEP:
            return False
        a_i = alpha[i] + y[i] * y[j] * (alpha[j] - a_j)
        # Exact arithmetic keeps a_i inside [0, C]; clamp float drift only.
        a_i = min(max(a_i, 0.0), C)
        if a_i < _SNAP:
            a_i = 0.0
        elif a_i > C - _SNAP:
            a_i = C

        d_i = a_i - alpha[i]
        d_j = a_j - alpha[j]
        self.f += d_i * y[i] * row_i + d_j * y[j] * row_j
        alpha[i] = a_i
        alpha[j] = a_j
        self._extremes = None
        return True

    def examine(self, i: int) -> bool:
        """Try to improve a KKT-violating index i; True on progress.

        The partner maximising the error gap |E_i - E_j| is taken from the
        set whose alphas can move jointly with alpha_i in the direction the
        violation demands; that extreme partner is exactly the point
        certifying the violation. Pairing with a partner pinned at a bound
        in the required direction always yields an empty feasible segment,
        so those are excluded up front.
        """
        n = len(self.y)
        cand = self.y - self.f
        b_lo, b_hi = self.interval()
        lower, upper = self._bound_masks()
        in_lower, in_upper = self._membership(i)
        viol_low = (cand[i] - b_hi) if in_lower else -np.inf
        viol_up = (b_lo - cand[i]) if in_upper else -np.inf
        if viol_low >= viol_up:
            partners = upper  # alpha_i joins the lower extreme, partner yields
            gap = np.where(partners, cand[i] - cand, -np.inf)
        else:
            partners = lower
            gap = np.where(partners, cand - cand[i], -np.inf)
        gap[i] = -np.inf
        j = int(np.argmax(gap))
        if gap[j] > 0.0 and self.take_step(i, j):
            return True
        # Fall back to a sequential scan from the next index, wrapping.
        for off in range(1, n):
            j = (i + off) % n
            if self.take_step(i, j):
                return True
        return False

    def centred_bias(self) -> float:
        """Bias at the centre of the KKT feasibility interval.

        For each point, cand = y - f is the bias that would put it exactly
        on the margin. Free alphas pin the bias near their candidates;
        at-bound alphas only bound it from one side. The midpoint of the
        interval minimises the worst KKT violation.
        """
        b_lo, b_hi = self.interval()
        if b_lo == -np.inf:
            return b_hi
        if b_hi == np.inf:
            return b_lo
        return (b_lo + b_hi) / 2.0


def train_binary(X, y, config: SvmConfig | None = None,
                 class_pair: tuple[int, int] = (0, 1)) -> BinarySvm:
    """Solve the binary soft-margin dual by sequential minimal optimisation.

    Platt-style simplified solver: sweep all rows, and for each row violating
    its KKT condition beyond tol (measured against the bias feasibility
    interval, see _SmoState), pair it with the row maximising the error gap
    |E_i - E_j| (sequential scan as fallback) and solve the two-variable
    subproblem in closed form. Sweeping stops after ``max_passes``
    consecutive sweeps without a change, or at the ``max_iter`` sweep cap
    (10n by default). The final bias centres the KKT feasibility interval.
    Entirely deterministic: no randomness anywhere.

    Args:
        X: feature matrix, n rows.
        y: labels, one of {-1, +1} per row, both signs present.
        config: solver parameters; a gamma of "scale" resolves on X.
        class_pair: class codes the -/+ signs stand for.

    Returns:
        BinarySvm keeping only rows with alpha > 0. The signed dual
        coefficients always sum to (numerically) zero.
    """
    cfg = config or SvmConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n = X.shape[0]
    if len(y) != n:
        raise ValueError("X and y must have the same number of rows")
    if n < 2:
        raise ValueError("need at least 2 rows")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if not ((y > 0).any() and (y < 0).any()):
        raise ValueError("both label signs must be present")

    gamma = gamma_scale(X) if cfg.gamma == "scale" else float(cfg.gamma)
    max_sweeps = cfg.max_iter if cfg.max_iter is not None else 10 * n

    state = _SmoState(X, y, cfg.C, gamma, cfg.tol)
    sweeps = 0
    quiet_sweeps = 0
    while quiet_sweeps < cfg.max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            if state.violates_kkt(i) and state.examine(i):
                changed += 1
        sweeps += 1
        quiet_sweeps = quiet_sweeps + 1 if changed == 0 else 0

    bias = state.centred_bias()
    mask = state.alpha > 0.0
    return BinarySvm(
        support_vectors=X[mask].copy(),
        dual_coefs=(state.alpha * y)[mask],
        bias=bias,
        class_pair=(int(class_pair[0]), int(class_pair[1])),
        gamma=gamma,
    )


def decision_value(machine: BinarySvm, x) -> float:
    """sum_i dual_coef_i * k(sv_i, x) + bias; sign + favours class_pair[1]."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) != machine.support_vectors.shape[1]:
        raise ValueError(
            f"expected a vector of length {machine.support_vectors.shape[1]}"
        )
    return float(decision_values(machine, x[None, :])[0])


def decision_values(machine: BinarySvm, X) -> np.ndarray:
    """Vectorised decision_value over the rows of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != machine.support_vectors.shape[1]:
        raise ValueError(
            f"expected a matrix with {machine.support_vectors.shape[1]} columns"
        )
    if machine.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], machine.bias)
    k = _kernel_matrix(machine.support_vectors, X, machine.gamma)
    return machine.dual_coefs @ k + machine.bias


def dual_objective(machine: BinarySvm) -> float:
    """Dual objective sum_i alpha_i - 1/2 sum_ij (a_i y_i)(a_j y_j) K_ij
    of the stored solution; the alphas that were clipped to zero drop out."""
    coefs = machine.dual_coefs
    gram = _kernel_matrix(machine.support_vectors, machine.support_vectors,
                          machine.gamma)
    return float(np.abs(coefs).sum() - 0.5 * coefs @ gram @ coefs)


def fit_ovo(X, y, config: SvmConfig | None = None, n_classes: int | None = None,
            threads: int = 1) -> OvoSvmModel:
    """Train one binary machine per unordered class pair.

    For the pair (a, b) with a < b, rows of class a get label -1 and rows of
    class b get +1. A gamma of "scale" resolves once on the full matrix, so
    every binary shares the same kernel width. Binaries are independent;
    with threads > 1 they train concurrently with identical results.

    Args:
        X: feature matrix.
        y: class codes covering every class in [0, K) at least once.
        config: shared solver parameters.
        n_classes: fixes K; inferred as max(y) + 1 when omitted.
        threads: worker threads for pair training.

    Returns:
        OvoSvmModel with K*(K-1)/2 binaries in pair order.
    """
    cfg = config or SvmConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if len(y) != X.shape[0]:
        raise ValueError("X and y must have the same number of rows")
    if len(y) == 0:
        raise ValueError("cannot fit on an empty matrix")
    k = int(n_classes) if n_classes is not None else int(y.max()) + 1
    if k < 2:
        raise ValueError("need at least 2 classes")
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"class codes must lie in [0, {k})")
    counts = np.bincount(y, minlength=k)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ValueError(f"class {int(missing[0])} has no training rows")

    if cfg.gamma == "scale":
        cfg = replace(cfg, gamma=gamma_scale(X))

    def train_pair(pair: tuple[int, int]) -> BinarySvm:
        a, b = pair
        rows = np.flatnonzero((y == a) | (y == b))
        labels = np.where(y[rows] == b, 1.0, -1.0)
        return train_binary(X[rows], labels, cfg, class_pair=(a, b))

    pairs = list(combinations(range(k), 2))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            binaries = tuple(pool.map(train_pair, pairs))
    else:
        binaries = tuple(train_pair(p) for p in pairs)
    return OvoSvmModel(n_classes=k, binaries=binaries)


def predict_ovo(model: OvoSvmModel, X) -> np.ndarray:
    """Vote among the binary machines, one class code per row.

    Each machine votes for class_pair[1] when its decision value is
    positive, class_pair[0] otherwise. Vote ties resolve to the tied class
    with the larger total |decision value| over its machines; remaining
    ties resolve to the lowest class code. The outcome does not depend on
    the order the binaries are stored in.
    """
    if not model.fitted:
        raise ValueError("model is not fitted")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n = X.shape[0]
    votes = np.zeros((n, model.n_classes), dtype=np.int64)
    magnitude = np.zeros((n, model.n_classes))
    for machine in model.binaries:
        neg, pos = machine.class_pair
        d = decision_values(machine, X)
        favours_pos = d > 0.0
        votes[favours_pos, pos] += 1
        votes[~favours_pos, neg] += 1
        magnitude[:, pos] += np.abs(d)
        magnitude[:, neg] += np.abs(d)
    top = votes.max(axis=1, keepdims=True)
    # argmax over magnitudes restricted to vote-tied classes; first maximum
    # wins, which is the lowest class code.
    tied_magnitude = np.where(votes == top, magnitude, -1.0)
    return np.argmax(tied_magnitude, axis=1).astype(np.int64)
