"""ATE and ATT for a binary treatment via efficient moment functions
with post-Lasso outcome regressions and propensity score.

The outcome model uses the interacted dictionary (d*w, (1-d)*w) with
w = (1, x), so g(1, z) and g(0, z) are linear in w with separate
coefficients. Both arm intercepts are unpenalized.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .lasso import PenaltyConfig, feasible_loadings, feasible_logistic, logistic_mle
from .regression import ols_fit, t_interval

LINKS = ("linear", "logit")


class ArmSizeError(ValueError):
    """A treatment arm is too small to fit its outcome regression."""


def _check_prop(m):
    m = np.asarray(m, dtype=float)
    if np.any((m <= 0) | (m >= 1)):
        raise ValueError("propensity must lie strictly inside (0, 1)")
    return m


def phi(alpha, y, d, g0, g1, m):
    """alpha - d(y - g1)/m + (1 - d)(y - g0)/(1 - m) - (g1 - g0)."""
    m = _check_prop(m)
    return alpha - d * (y - g1) / m + (1 - d) * (y - g0) / (1 - m) - (g1 - g0)


def phi_tilde(gamma, y, d, g0, g1, m, mu):
    """d(y - g1)/mu - m(1 - d)(y - g0)/((1 - m) mu) + d(g1 - g0)/mu - gamma d/mu."""
    m = _check_prop(m)
    if np.any(np.asarray(mu) <= 0):
        raise ValueError("mu must be positive")
    return (d * (y - g1) / mu - m * (1 - d) * (y - g0) / ((1 - m) * mu)
            + d * (g1 - g0) / mu - gamma * d / mu)


def _logistic(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


@dataclass(frozen=True)
class NuisanceFits:
    """Linear indices over w = (1, x): g(0,z) = w'beta_g0, g(1,z) = w'beta_g1,
    m(z) = link(w'beta_m), clipped to [trim_eps, 1 - trim_eps]."""

    beta_g0: np.ndarray
    beta_g1: np.ndarray
    beta_m: np.ndarray
    link: str = "linear"
    trim_eps: float = 0.01
    selected_g: tuple = ()
    selected_m: tuple = ()

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}")
        if not 0 < self.trim_eps < 0.5:
            raise ValueError("trim_eps must lie in (0, 0.5)")

    def g0(self, W):
        return W @ self.beta_g0

    def g1(self, W):
        return W @ self.beta_g1

    def m(self, W):
        idx = W @ self.beta_m
        raw = idx if self.link == "linear" else _logistic(idx)
        return np.clip(raw, self.trim_eps, 1 - self.trim_eps)


@dataclass(frozen=True)
class AteReport:
    effect_hat: float
    se: float
    ci_lower: float
    ci_upper: float
    level: float
    kind: str
    mu_hat: Optional[float] = None
    fits: Optional[NuisanceFits] = None

    @property
    def ci(self):
        return self.ci_lower, self.ci_upper


def dictionary(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.column_stack([np.ones(X.shape[0]), X])


def _check_binary(d):
    d = np.asarray(d, dtype=float)
    if not np.all((d == 0) | (d == 1)):
        raise ValueError("treatment must be binary 0/1")
    return d


def fit_nuisances(y, d, X, link: str = "linear", config: PenaltyConfig = PenaltyConfig(),
                  trim_eps: float = 0.01, union: bool = False) -> NuisanceFits:
    """Post-Lasso outcome regressions and propensity score.

    ``union=True`` refits both nuisances on the union of the outcome and
    propensity selections.
    """
    if link not in LINKS:
        raise ValueError(f"link must be one of {LINKS}")
    y = np.asarray(y, dtype=float)
    d = _check_binary(d)
    n1 = int(d.sum())
    if n1 < 2 or d.size - n1 < 2:
        raise ArmSizeError(f"need at least 2 treated and 2 control observations (got {n1} and {d.size - n1})")
    W = dictionary(X)
    k = W.shape[1]
    Xt = np.column_stack([d[:, None] * W, (1 - d)[:, None] * W])
    _, gfit = feasible_loadings(Xt, y, replace(config, unpenalized=(0, k)))
    sel_g = sorted({j % k for j in gfit.support} - {0})

    if link == "linear":
        _, mfit = feasible_loadings(W, d, replace(config, unpenalized=(0,)))
    else:
        _, mfit = feasible_logistic(W, d, replace(config, unpenalized=(0,)))
    sel_m = sorted(set(mfit.support.tolist()) - {0})

    if union:
        cols_g = cols_m = [0] + sorted(set(sel_g) | set(sel_m))
        g_cols = cols_g + [k + j for j in cols_g]
    else:
        # keep the arm-specific Lasso support for the outcome refit
        g_cols = sorted(set(gfit.support.tolist()) | {0, k})
        cols_m = [0] + sel_m
    gref = ols_fit(Xt[:, g_cols], y)
    beta_g = np.zeros(2 * k)
    beta_g[g_cols] = gref.coef
    beta_m = np.zeros(k)
    if link == "linear":
        beta_m[cols_m] = ols_fit(W[:, cols_m], d).coef
    else:
        beta_m[cols_m] = logistic_mle(W[:, cols_m], d)
    return NuisanceFits(beta_g[k:], beta_g[:k], beta_m, link, trim_eps, tuple(sel_g), tuple(sel_m))


def ate_from_fits(y, d, X, fits: NuisanceFits, level: float = 0.95) -> AteReport:
    y = np.asarray(y, dtype=float)
    d = _check_binary(d)
    W = dictionary(X)
    g0, g1, m = fits.g0(W), fits.g1(W), fits.m(W)
    alpha = float(np.mean(d * (y - g1) / m - (1 - d) * (y - g0) / (1 - m) + (g1 - g0)))
    score = phi(alpha, y, d, g0, g1, m)
    se = float(np.sqrt(np.mean(score ** 2) / y.size))
    lo, hi = t_interval(alpha, se, level)
    return AteReport(alpha, se, lo, hi, level, "ATE", None, fits)


def att_from_fits(y, d, X, fits: NuisanceFits, level: float = 0.95) -> AteReport:
    y = np.asarray(y, dtype=float)
    d = _check_binary(d)
    mu = float(d.mean())
    if mu == 0:
        raise ArmSizeError("no treated observations")
    W = dictionary(X)
    g0, g1, m = fits.g0(W), fits.g1(W), fits.m(W)
    gamma = float(np.mean(d * (y - g1) - m * (1 - d) * (y - g0) / (1 - m) + d * (g1 - g0)) / mu)
    score = phi_tilde(gamma, y, d, g0, g1, m, mu)
    se = float(np.sqrt(np.mean(score ** 2) / y.size))
    lo, hi = t_interval(gamma, se, level)
    return AteReport(gamma, se, lo, hi, level, "ATT", mu, fits)


def ate_estimate(y, d, X, link: str = "linear", config: PenaltyConfig = PenaltyConfig(),
                 level: float = 0.95, trim_eps: float = 0.01, union: bool = False) -> AteReport:
    fits = fit_nuisances(y, d, X, link, config, trim_eps, union)
    return ate_from_fits(y, d, X, fits, level)


def att_estimate(y, d, X, link: str = "linear", config: PenaltyConfig = PenaltyConfig(),
                 level: float = 0.95, trim_eps: float = 0.01, union: bool = False) -> AteReport:
    d = _check_binary(d)
    if d.sum() == 0:
        raise ArmSizeError("no treated observations")
    fits = fit_nuisances(y, d, X, link, config, trim_eps, union)
    return att_from_fits(y, d, X, fits, level)


BLOCKS = ("g0", "g1", "m", "alpha")


def mean_phi(alpha, y, d, W, fits: NuisanceFits) -> float:
    return float(np.mean(phi(alpha, y, d, fits.g0(W), fits.g1(W), fits.m(W))))


def immunization_check(y, d, X, fits: NuisanceFits, direction, h: float,
                       block: str = "g0", alpha: float = 0.0) -> float:
    """Central finite difference of E_n[phi] along ``direction`` in one
    coefficient block ("g0", "g1", "m") or in alpha (``direction`` scalar)."""
    if h <= 0:
        raise ValueError("step h must be positive")
    if block not in BLOCKS:
        raise ValueError(f"block must be one of {BLOCKS}")
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    W = dictionary(X)
    if block == "alpha":
        u = float(np.asarray(direction).ravel()[0]) if np.ndim(direction) else float(direction)
        return (mean_phi(alpha + h * u, y, d, W, fits) - mean_phi(alpha - h * u, y, d, W, fits)) / (2 * h)
    u = np.asarray(direction, dtype=float)
    field = {"g0": "beta_g0", "g1": "beta_g1", "m": "beta_m"}[block]
    base = getattr(fits, field)
    if u.shape != base.shape:
        raise ValueError(f"direction must have length {base.size}")
    if not np.any(u):
        return 0.0
    plus = replace(fits, **{field: base + h * u})
    minus = replace(fits, **{field: base - h * u})
    return (mean_phi(alpha, y, d, W, plus) - mean_phi(alpha, y, d, W, minus)) / (2 * h)
