"""Dense least-squares helpers: OLS with deterministic rank reduction,
HC3 (jackknife) covariance, annihilator projections and normal intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, stats

RANK_TOL = 1e-10
LEVERAGE_TOL = 1e-12


class LeverageError(ValueError):
    """Raised when an observation has leverage numerically equal to one."""

    def __init__(self, row: int, h: float):
        super().__init__(f"observation {row} has leverage {h:.15g} >= 1 - 1e-12; "
                         "HC3 variance is undefined")
        self.row = row


class DegreesOfFreedomError(ValueError):
    """Raised when a regression has no residual degrees of freedom left."""


def _as_finite(a, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} has zero rows")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Truth:
    alpha0: float
    support_y: tuple
    support_d: tuple
    signal_y: np.ndarray
    signal_d: np.ndarray


@dataclass(frozen=True)
class Dataset:
    y: np.ndarray
    d: np.ndarray
    X: np.ndarray
    truth: Optional[Truth] = None

    def __post_init__(self):
        y = _as_finite(self.y, "y", 1)
        d = _as_finite(self.d, "d", 1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        X = _as_finite(X, "X", 2)
        n = y.shape[0]
        if n < 2:
            raise ValueError("need at least two observations")
        if d.shape[0] != n or X.shape[0] != n:
            raise ValueError(f"row counts differ: y={n}, d={d.shape[0]}, X={X.shape[0]}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class OlsFit:
    """OLS fit. ``coef`` has one entry per input column; dropped (collinear)
    columns carry a zero coefficient and are listed in ``dropped``."""

    coef: np.ndarray
    residuals: np.ndarray
    hat_diag: np.ndarray
    dof: int
    kept: np.ndarray
    dropped: tuple = ()

    @property
    def rank(self) -> int:
        return len(self.kept)


@dataclass(frozen=True)
class EstimateReport:
    alpha_hat: float
    se: float
    ci_lower: float
    ci_upper: float
    level: float
    selected: tuple = ()
    flags: tuple = field(default=())

    @property
    def s_hat(self) -> int:
        return len(self.selected)

    @property
    def ci_length(self) -> float:
        return self.ci_upper - self.ci_lower

    def covers(self, value: float) -> bool:
        return self.ci_lower <= value <= self.ci_upper


def independent_columns(X: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Indices of a maximal independent column subset, scanning left to right.

    Column j is kept when its residual on the columns already kept has norm
    above ``tol * ||x_j||``, so in a collinear group the lowest index wins.
    """
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    norms = np.linalg.norm(X, axis=0)
    basis = np.empty((n, min(n, k)))
    kept = []
    for j in range(k):
        if norms[j] == 0.0 or len(kept) == n:
            continue
        r = X[:, j].copy()
        q = basis[:, : len(kept)]
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            r -= q @ (q.T @ r)
        rn = np.linalg.norm(r)
        if rn > tol * norms[j]:
            basis[:, len(kept)] = r / rn
            kept.append(j)
    return np.asarray(kept, dtype=int)


def ols_fit(X_aug, y) -> OlsFit:
    X = _as_finite(X_aug, "X_aug", 2)
    y = _as_finite(y, "y", 1)
    n, k = X.shape
    if y.shape[0] != n:
        raise ValueError(f"X_aug has {n} rows but y has {y.shape[0]}")
    kept = independent_columns(X)
    coef = np.zeros(k)
    if kept.size == 0:
        return OlsFit(coef, y.copy(), np.zeros(n), n, kept, tuple(range(k)))
    Xk = X[:, kept]
    q, r = linalg.qr(Xk, mode="economic")
    b = linalg.solve_triangular(r, q.T @ y)
    coef[kept] = b
    resid = y - Xk @ b
    hat = np.einsum("ij,ij->i", q, q)
    dropped = tuple(int(j) for j in np.setdiff1d(np.arange(k), kept))
    return OlsFit(coef, resid, hat, n - kept.size, kept, dropped)


def hc_jackknife_cov(fit: OlsFit, X_aug) -> np.ndarray:
    """HC3 sandwich (X'X)^-1 X' diag(e_i^2 / (1-h_ii)^2) X (X'X)^-1.

    Rows/columns of dropped regressors are zero.
    """
    X = np.asarray(X_aug, dtype=float)
    k = X.shape[1]
    cov = np.zeros((k, k))
    if fit.kept.size == 0:
        return cov
    bad = np.flatnonzero(fit.hat_diag >= 1.0 - LEVERAGE_TOL)
    if bad.size:
        raise LeverageError(int(bad[0]), float(fit.hat_diag[bad[0]]))
    Xk = X[:, fit.kept]
    bread = linalg.pinvh(Xk.T @ Xk)
    u = fit.residuals / (1.0 - fit.hat_diag)
    meat_half = Xk * u[:, None]
    sub = bread @ (meat_half.T @ meat_half) @ bread
    sub = 0.5 * (sub + sub.T)
    cov[np.ix_(fit.kept, fit.kept)] = sub
    return cov


def residual_maker(X_sel, v) -> np.ndarray:
    """Apply the annihilator M = I - P_X to ``v``."""
    v = np.asarray(v, dtype=float)
    X = np.asarray(X_sel, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.size == 0 or X.shape[1] == 0:
        return v.copy()
    kept = independent_columns(X)
    if kept.size == 0:
        return v.copy()
    q, _ = linalg.qr(X[:, kept], mode="economic")
    return v - q @ (q.T @ v)


def normal_quantile(level: float) -> float:
    return float(stats.norm.ppf(0.5 + level / 2.0))


def t_interval(alpha_hat: float, se: float, level: float) -> tuple[float, float]:
    if se < 0:
        raise ValueError("se must be non-negative")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    half = normal_quantile(level) * se
    return alpha_hat - half, alpha_hat + half


def report_from_ols(fit: OlsFit, X_aug, level: float, selected=(), flags=(), col: int = 0) -> EstimateReport:
    """Build a report for coefficient ``col`` of an OLS fit with HC3 se."""
    flags = tuple(flags)
    if col not in set(fit.kept.tolist()):
        raise DegreesOfFreedomError("treatment column is collinear with the selected controls")
    try:
        cov = hc_jackknife_cov(fit, X_aug)
        se = float(np.sqrt(max(cov[col, col], 0.0)))
    except LeverageError:
        se = np.inf
        flags += ("leverage",)
    a = float(fit.coef[col])
    lo, hi = t_interval(a, se, level) if np.isfinite(se) else (-np.inf, np.inf)
    return EstimateReport(a, se, lo, hi, level, tuple(int(j) for j in selected), flags)
