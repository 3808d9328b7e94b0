"""Weighted-l1 Lasso with data-driven penalty level and iterated loadings.

Least-squares objective::

    mean((y - X b)^2) + (lam / n) * sum_j psi_j |b_j|

Logistic objective::

    mean(log(1 + exp(x'b)) - d x'b) + (lam / n) * sum_j psi_j |b_j|
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import _kernels
from .regression import OlsFit, ols_fit

LOADING_FLOOR = 1e-8


class SeparationError(ValueError):
    """Binary outcome has no variation, so the logistic fit is degenerate."""


@dataclass(frozen=True)
class PenaltyConfig:
    c: float = 1.1
    gamma: float = 0.05
    loading_iterations: int = 5
    tol: float = 1e-7
    max_iter: int = 10_000
    unpenalized: tuple = ()
    # loadings are refreshed from post-Lasso residuals (False: Lasso residuals)
    post_lasso_residuals: bool = True
    # fixed penalty level; None uses penalty_level(n, p, c, gamma)
    lam: float | None = None

    def __post_init__(self):
        if not self.c > 1:
            raise ValueError("c must exceed 1")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.loading_iterations < 1:
            raise ValueError("loading_iterations must be >= 1")

    def with_unpenalized(self, cols) -> "PenaltyConfig":
        return replace(self, unpenalized=tuple(int(j) for j in cols))


@dataclass(frozen=True)
class LassoFit:
    coef: np.ndarray
    lam: float
    loadings: np.ndarray
    iterations: int
    converged: bool
    unpenalized: tuple = ()
    objective_trace: np.ndarray = field(default=None, repr=False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coef != 0.0)

    def penalized_support(self) -> np.ndarray:
        """Support restricted to penalized columns (the *selected* controls)."""
        s = self.support
        if not self.unpenalized:
            return s
        return np.setdiff1d(s, np.asarray(self.unpenalized, dtype=int))


def penalty_level(n: int, p: int, c: float = 1.1, gamma: float = 0.05) -> float:
    """lam = 2 c sqrt(n) Phi^-1(1 - gamma / (2p))."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    if not c > 1 or not 0 < gamma < 1:
        raise ValueError("need c > 1 and gamma in (0, 1)")
    return float(2.0 * c * np.sqrt(n) * stats.norm.ppf(1.0 - gamma / (2.0 * p)))


def _penalties(lam, loadings, unpenalized, n, p):
    loadings = np.asarray(loadings, dtype=float)
    if loadings.shape != (p,):
        raise ValueError(f"loadings must have length {p}")
    free = np.zeros(p, dtype=bool)
    free[list(unpenalized)] = True
    if np.any(loadings[~free] < 0) or not np.all(np.isfinite(loadings)):
        raise ValueError("loadings must be finite and non-negative")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    pen = (lam / n) * loadings
    pen[free] = 0.0
    return pen


def _prep(X, v):
    X = np.asfortranarray(np.asarray(X, dtype=float))
    v = np.ascontiguousarray(np.asarray(v, dtype=float))
    if X.ndim != 2 or v.shape != (X.shape[0],):
        raise ValueError("shape mismatch between X and response")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(v))):
        raise ValueError("non-finite input")
    return X, v


def lasso_cd(X, y, lam, loadings, unpenalized=(), tol=1e-7, max_iter=10_000, init=None) -> LassoFit:
    X, y = _prep(X, y)
    n, p = X.shape
    pen = _penalties(lam, loadings, unpenalized, n, p)
    beta = np.zeros(p) if init is None else np.array(init, dtype=float)
    trace = np.empty(max(max_iter, 1))
    sweeps, ok = _kernels.lasso_ls(X, y, pen, beta, tol, max_iter, trace)
    return LassoFit(beta, float(lam), np.asarray(loadings, dtype=float).copy(), int(sweeps),
                    bool(ok), tuple(int(j) for j in unpenalized), trace[:sweeps].copy())


def lasso_objective(X, y, coef, lam, loadings, unpenalized=()) -> float:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    pen = _penalties(lam, loadings, unpenalized, n, p)
    r = np.asarray(y, dtype=float) - X @ np.asarray(coef, dtype=float)
    return float(r @ r / n + pen @ np.abs(coef))


def kkt_violation(X, y, fit: LassoFit) -> float:
    """Largest violation of the least-squares stationarity conditions.

    Active j: 2 E_n[x_j e] = (lam/n) psi_j sign(b_j); inactive j:
    |2 E_n[x_j e]| <= (lam/n) psi_j; unpenalized j: score zero.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    pen = _penalties(fit.lam, fit.loadings, fit.unpenalized, n, p)
    score = 2.0 * X.T @ (np.asarray(y, dtype=float) - X @ fit.coef) / n
    return _kkt_gap(score, pen, fit.coef)


def _kkt_gap(score, pen, coef):
    on = coef != 0.0
    gap = np.zeros_like(score)
    gap[on] = np.abs(score[on] - pen[on] * np.sign(coef[on]))
    gap[~on] = np.maximum(np.abs(score[~on]) - pen[~on], 0.0)
    return float(gap.max()) if gap.size else 0.0


def _loadings_from(X, resid):
    return np.sqrt(np.mean((X * resid[:, None]) ** 2, axis=0))


def _floor(psi):
    top = psi.max() if psi.size else 0.0
    return np.maximum(psi, LOADING_FLOOR * top)


def feasible_loadings(X, y, config: PenaltyConfig = PenaltyConfig(), lam=None):
    """Iterate loadings psi_j = sqrt(E_n[x_j^2 e^2]) starting from e = y - mean(y).

    Returns ``(loadings, fit)`` where ``fit`` is the Lasso computed with
    ``loadings``. Stops early once the loadings move by less than
    ``config.tol``.
    """
    X, y = _prep(X, y)
    n, p = X.shape
    if lam is None:
        lam = config.lam
    if lam is None:
        lam = penalty_level(n, max(p - len(config.unpenalized), 1), config.c, config.gamma)
    psi = _loadings_from(X, y - y.mean())
    if p == 0 or psi.max() == 0.0:
        # no outcome variation to explain
        psi = np.ones(p)
        return psi, LassoFit(np.zeros(p), float(lam), psi, 0, True, config.unpenalized, np.zeros(0))
    psi = _floor(psi)
    fit = lasso_cd(X, y, lam, psi, config.unpenalized, config.tol, config.max_iter)
    for _ in range(config.loading_iterations):
        resid = _refit_residuals(X, y, fit, config)
        new = _loadings_from(X, resid)
        if new.max() == 0.0:
            break
        new = _floor(new)
        moved = np.max(np.abs(new - psi))
        psi = new
        fit = lasso_cd(X, y, lam, psi, config.unpenalized, config.tol, config.max_iter, init=fit.coef)
        if moved <= config.tol:
            break
    if not fit.converged:
        warnings.warn("Lasso did not converge within max_iter", RuntimeWarning, stacklevel=2)
    return psi, fit


def _refit_residuals(X, y, fit, config):
    if not config.post_lasso_residuals:
        return y - X @ fit.coef
    cols = fit.support
    if cols.size == 0:
        return y.copy()
    # a saturated refit has zero residuals; fall back to the Lasso residuals
    if cols.size >= X.shape[0] - 1:
        return y - X @ fit.coef
    return ols_fit(X[:, cols], y).residuals


def post_lasso(X, y, support) -> OlsFit:
    """OLS of y on the selected columns. ``coef`` is indexed like ``support``."""
    X = np.asarray(X, dtype=float)
    support = np.asarray(sorted(int(j) for j in support), dtype=int)
    if support.size == 0:
        y = np.asarray(y, dtype=float)
        return OlsFit(np.zeros(0), y.copy(), np.zeros(y.shape[0]), y.shape[0], np.zeros(0, dtype=int))
    return ols_fit(X[:, support], y)


# --- logistic -------------------------------------------------------------

def logistic_lasso(X, d, lam, loadings, unpenalized=(), tol=1e-7, max_iter=10_000, init=None) -> LassoFit:
    X, d = _prep(X, d)
    n, p = X.shape
    if not np.all((d == 0.0) | (d == 1.0)):
        raise ValueError("d must be binary 0/1")
    if d.min() == d.max():
        raise SeparationError("treatment is constant; logistic fit is separated")
    pen = _penalties(lam, loadings, unpenalized, n, p)
    beta = np.zeros(p) if init is None else np.array(init, dtype=float)
    trace = np.empty(max(max_iter, 1))
    sweeps, ok = _kernels.lasso_logit(X, d, pen, beta, tol, max_iter, trace)
    return LassoFit(beta, float(lam), np.asarray(loadings, dtype=float).copy(), int(sweeps),
                    bool(ok), tuple(int(j) for j in unpenalized), trace[:sweeps].copy())


def logistic_objective(X, d, coef, lam, loadings, unpenalized=()) -> float:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    pen = _penalties(lam, loadings, unpenalized, n, p)
    eta = X @ np.asarray(coef, dtype=float)
    return float(np.mean(np.logaddexp(0.0, eta) - d * eta) + pen @ np.abs(coef))


def logistic_kkt_violation(X, d, fit: LassoFit) -> float:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    pen = _penalties(fit.lam, fit.loadings, fit.unpenalized, n, p)
    prob = 1.0 / (1.0 + np.exp(-(X @ fit.coef)))
    score = X.T @ (np.asarray(d, dtype=float) - prob) / n
    return _kkt_gap(score, pen, fit.coef)


def feasible_logistic(X, d, config: PenaltyConfig = PenaltyConfig(), lam=None):
    """Logistic Lasso with iterated loadings sqrt(E_n[x_j^2 (d - p_hat)^2]).

    The logistic score is half the least-squares score, so the default
    penalty is half of :func:`penalty_level`.
    """
    X, d = _prep(X, d)
    n, p = X.shape
    if lam is None and config.lam is not None:
        lam = 0.5 * config.lam
    if lam is None:
        lam = 0.5 * penalty_level(n, max(p - len(config.unpenalized), 1), config.c, config.gamma)
    psi = _floor(_loadings_from(X, d - d.mean()))
    fit = logistic_lasso(X, d, lam, psi, config.unpenalized, config.tol, config.max_iter)
    for _ in range(config.loading_iterations):
        prob = 1.0 / (1.0 + np.exp(-(X @ fit.coef)))
        new = _floor(_loadings_from(X, d - prob))
        moved = np.max(np.abs(new - psi))
        psi = new
        fit = logistic_lasso(X, d, lam, psi, config.unpenalized, config.tol, config.max_iter, init=fit.coef)
        if moved <= config.tol:
            break
    return psi, fit


def logistic_mle(X, d, max_iter=100, tol=1e-10) -> np.ndarray:
    """Unpenalized logistic regression by damped Newton steps (post-Lasso refit)."""
    X = np.asarray(X, dtype=float)
    d = np.asarray(d, dtype=float)
    n, k = X.shape
    beta = np.zeros(k)
    if k == 0:
        return beta

    def loss(b):
        eta = X @ b
        return np.mean(np.logaddexp(0.0, eta) - d * eta)

    cur = loss(beta)
    for _ in range(max_iter):
        prob = 1.0 / (1.0 + np.exp(-(X @ beta)))
        grad = X.T @ (prob - d) / n
        hess = (X * (prob * (1 - prob))[:, None]).T @ X / n + 1e-10 * np.eye(k)
        step = np.linalg.solve(hess, grad)
        t = 1.0
        while t > 1e-8:
            cand = beta - t * step
            val = loss(cand)
            if val <= cur:
                break
            t *= 0.5
        else:
            break
        beta, prev, cur = cand, cur, val
        if np.max(np.abs(t * step)) < tol or prev - cur < tol * 1e-3:
            break
    return beta
