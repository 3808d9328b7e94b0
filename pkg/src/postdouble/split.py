"""Split-sample double selection with cross-fitted controls.

Controls are selected on one half and used to estimate on the other; the two
half-sample estimates are combined with weights n_k * Upsilon_k, where
Upsilon_k is the residual second moment of d after partialling out the
cross-fitted controls. Variance uses truncated, dof-inflated residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lasso import PenaltyConfig
from .regression import Dataset, DegreesOfFreedomError, EstimateReport, ols_fit, t_interval
from .selection import DOF_FLAG, NONCONVERGED_FLAG, guard_selection, selection_sets

DEFAULT_TRUNC_C = 10.0


@dataclass(frozen=True)
class SplitFit:
    idx_a: np.ndarray
    idx_b: np.ndarray
    i_hat_a: tuple
    i_hat_b: tuple
    alpha_a: float
    alpha_b: float
    upsilon_a: float
    upsilon_b: float
    alpha_ab: float
    # per-half OLS pieces used for residuals, keyed "a"/"b"
    beta_check: dict
    beta_hat: dict
    v_hat: np.ndarray = None
    zeta_hat: np.ndarray = None
    flags: tuple = ()

    @property
    def s_hat_a(self) -> int:
        return len(self.i_hat_a)

    @property
    def s_hat_b(self) -> int:
        return len(self.i_hat_b)


def split_indices(n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Random partition with |A| = ceil(n / 2)."""
    if n < 4:
        raise ValueError("split-sample estimation needs n >= 4")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_a = (n + 1) // 2
    return np.sort(perm[:n_a]), np.sort(perm[n_a:])


def _subset(data: Dataset, idx) -> Dataset:
    return Dataset(data.y[idx], data.d[idx], data.X[idx])


def combine(alpha_a, alpha_b, upsilon_a, upsilon_b, n_a, n_b) -> float:
    wa, wb = n_a * upsilon_a, n_b * upsilon_b
    if wa + wb <= 0:
        raise DegreesOfFreedomError("treatment is fully explained by the selected controls in both halves")
    return float((wa * alpha_a + wb * alpha_b) / (wa + wb))


def _half_fit(sub: Dataset, controls):
    """OLS of y on (d, X[controls]) and of d on X[controls] within one half."""
    controls = list(controls)
    Xs = sub.X[:, controls]
    Z = np.column_stack([sub.d, Xs])
    fit = ols_fit(Z, sub.y)
    if 0 not in set(fit.kept.tolist()):
        raise DegreesOfFreedomError("treatment is collinear with the cross-fitted controls")
    if controls:
        dfit = ols_fit(Xs, sub.d)
        v = dfit.residuals
        b_hat = dfit.coef
    else:
        v = sub.d.copy()
        b_hat = np.zeros(0)
    return fit.coef[0], fit.coef[1:], v, b_hat


def fit_split(data: Dataset, i_hat_a, i_hat_b, idx_a, idx_b, flags=()) -> SplitFit:
    """Cross-fit given the sets selected on each half (no variance yet)."""
    sub_a, sub_b = _subset(data, idx_a), _subset(data, idx_b)
    # half a is fitted with controls chosen on half b, and vice versa
    alpha_a, bc_a, v_a, bh_a = _half_fit(sub_a, i_hat_b)
    alpha_b, bc_b, v_b, bh_b = _half_fit(sub_b, i_hat_a)
    ups_a = float(v_a @ v_a / len(idx_a))
    ups_b = float(v_b @ v_b / len(idx_b))
    alpha_ab = combine(alpha_a, alpha_b, ups_a, ups_b, len(idx_a), len(idx_b))
    return SplitFit(np.asarray(idx_a), np.asarray(idx_b), tuple(i_hat_a), tuple(i_hat_b),
                    float(alpha_a), float(alpha_b), ups_a, ups_b, alpha_ab,
                    {"a": bc_a, "b": bc_b}, {"a": bh_a, "b": bh_b}, flags=tuple(flags))


def truncation_level(n: int, s_other: int, trunc_c: float) -> float:
    """H_k = C sqrt(n / ((s ∨ sqrt n) log n))."""
    return float(trunc_c * np.sqrt(n / (max(s_other, np.sqrt(n)) * np.log(n))))


def compute_residuals(fit: SplitFit, data: Dataset, trunc_c: float = DEFAULT_TRUNC_C):
    """(zeta_hat, v_hat) over the full sample, in original row order."""
    n = data.n
    zeta = np.empty(n)
    v = np.empty(n)
    halves = (("a", fit.idx_a, fit.alpha_a, fit.i_hat_b), ("b", fit.idx_b, fit.alpha_b, fit.i_hat_a))
    for key, idx, alpha_k, other in halves:
        n_k, s_other = len(idx), len(other)
        if n_k - s_other - 1 <= 0:
            raise DegreesOfFreedomError(f"half {key}: n_k={n_k} leaves no dof with {s_other} controls")
        Xs = data.X[np.ix_(idx, list(other))]
        e = data.y[idx] - data.d[idx] * alpha_k - Xs @ fit.beta_check[key]
        z0 = e * np.sqrt(n_k / (n_k - s_other - 1))
        vk = data.d[idx] - Xs @ fit.beta_hat[key]
        h = truncation_level(n, s_other, trunc_c)
        zeta[idx] = np.where(np.maximum(np.abs(z0), np.abs(vk)) <= h, z0, 0.0)
        v[idx] = vk
    return zeta, v


def split_variance(zeta: np.ndarray, v: np.ndarray) -> float:
    """E_n[v^2]^-1 E_n[v^2 zeta^2] E_n[v^2]^-1 / n."""
    n = v.size
    ev2 = np.mean(v ** 2)
    if ev2 <= 0:
        raise DegreesOfFreedomError("residualised treatment has zero variance")
    return float(np.mean(v ** 2 * zeta ** 2) / ev2 ** 2 / n)


def split_sample_estimate(data: Dataset, config: PenaltyConfig = PenaltyConfig(), level: float = 0.95,
                          seed=0, trunc_c: float = DEFAULT_TRUNC_C, include_i3: bool = True):
    """Returns ``(report, split_fit)``."""
    idx_a, idx_b = split_indices(data.n, seed)
    flags = []
    chosen = {}
    # the set chosen on half k is used on the other half, so guard against its size
    sizes = {"a": len(idx_b), "b": len(idx_a)}
    for key, idx in (("a", idx_a), ("b", idx_b)):
        sub = _subset(data, idx)
        sets = selection_sets(sub, config, include_i3=include_i3)
        if not sets.converged:
            flags.append(NONCONVERGED_FLAG)
        sel, truncated = guard_selection(sets.union, sizes[key], sets.strength(data.p))
        if truncated:
            flags.append(DOF_FLAG)
        chosen[key] = sel
    flags = tuple(dict.fromkeys(flags))
    fit = fit_split(data, chosen["a"], chosen["b"], idx_a, idx_b, flags)
    zeta, v = compute_residuals(fit, data, trunc_c)
    se = float(np.sqrt(split_variance(zeta, v)))
    lo, hi = t_interval(fit.alpha_ab, se, level)
    fit = SplitFit(**{**fit.__dict__, "v_hat": v, "zeta_hat": zeta})
    selected = tuple(sorted(set(fit.i_hat_a) | set(fit.i_hat_b)))
    return EstimateReport(fit.alpha_ab, se, lo, hi, level, selected, flags), fit
