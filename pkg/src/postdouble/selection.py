"""Full-sample treatment-effect estimators built on Lasso selection.

All estimators take a :class:`~postdouble.regression.Dataset` and return an
:class:`~postdouble.regression.EstimateReport` for the coefficient on ``d``.
Selection-based estimators accept precomputed :class:`SelectionSets` so a
Monte Carlo replication can share the three Lasso fits between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .lasso import LassoFit, PenaltyConfig, feasible_loadings
from .regression import (Dataset, DegreesOfFreedomError, EstimateReport, normal_quantile,
                         ols_fit, report_from_ols)

DOF_FLAG = "dof-truncated"
NONCONVERGED_FLAG = "lasso-nonconverged"


@dataclass(frozen=True)
class SelectionSets:
    i1: tuple
    i2: tuple
    i3: Optional[tuple] = None
    fit_d: Optional[LassoFit] = None
    fit_y: Optional[LassoFit] = None
    fit_yd: Optional[LassoFit] = None

    @property
    def union(self) -> tuple:
        parts = set(self.i1) | set(self.i2)
        if self.i3 is not None:
            parts |= set(self.i3)
        return tuple(sorted(parts))

    @property
    def converged(self) -> bool:
        fits = (self.fit_d, self.fit_y, self.fit_yd)
        return all(f.converged for f in fits if f is not None)

    def strength(self, p: int) -> np.ndarray:
        """Largest |Lasso coefficient| per control across the fits, used to
        rank controls when the selected set must be truncated."""
        s = np.zeros(p)
        if self.fit_d is not None:
            s = np.maximum(s, np.abs(self.fit_d.coef))
        if self.fit_y is not None:
            s = np.maximum(s, np.abs(self.fit_y.coef))
        if self.fit_yd is not None:
            s = np.maximum(s, np.abs(self.fit_yd.coef[1:]))
        return s


def _tupled(idx) -> tuple:
    return tuple(int(j) for j in idx)


def select_treatment(data: Dataset, config: PenaltyConfig) -> LassoFit:
    """Lasso of d on X (no unpenalized columns)."""
    return feasible_loadings(data.X, data.d, config.with_unpenalized(()))[1]


def select_outcome(data: Dataset, config: PenaltyConfig) -> LassoFit:
    """Lasso of y on X."""
    return feasible_loadings(data.X, data.y, config.with_unpenalized(()))[1]


def select_outcome_given_treatment(data: Dataset, config: PenaltyConfig) -> LassoFit:
    """Lasso of y on (d, X) with d unpenalized; column 0 is d."""
    Z = np.column_stack([data.d, data.X])
    return feasible_loadings(Z, data.y, config.with_unpenalized((0,)))[1]


def selection_sets(data: Dataset, config: PenaltyConfig = PenaltyConfig(),
                   include_i3: bool = True) -> SelectionSets:
    fit_d = select_treatment(data, config)
    fit_y = select_outcome(data, config)
    fit_yd = select_outcome_given_treatment(data, config) if include_i3 else None
    i3 = _tupled(fit_yd.penalized_support() - 1) if fit_yd is not None else None
    return SelectionSets(_tupled(fit_d.support), _tupled(fit_y.support), i3, fit_d, fit_y, fit_yd)


def guard_selection(selected, n: int, strength: Optional[np.ndarray] = None):
    """Keep at most n - 2 controls (so d plus controls leave one residual
    degree of freedom). Returns ``(selected, truncated)``."""
    selected = np.asarray(sorted(selected), dtype=int)
    if selected.size + 1 < n:
        return _tupled(selected), False
    keep = max(n - 2, 0)
    if strength is None:
        order = np.arange(selected.size)
    else:
        # stable sort: ties broken by lower index
        order = np.argsort(-strength[selected], kind="stable")
    return _tupled(np.sort(selected[order[:keep]])), True


def ols_on_controls(data: Dataset, controls, level: float, flags=()) -> EstimateReport:
    """OLS of y on (d, X[controls]) with HC3 standard error for d."""
    controls = _tupled(controls)
    Z = np.column_stack([data.d, data.X[:, list(controls)]]) if controls else data.d[:, None]
    fit = ols_fit(Z, data.y)
    if fit.dof < 1:
        raise DegreesOfFreedomError(f"no residual degrees of freedom with {len(controls)} controls and n={data.n}")
    return report_from_ols(fit, Z, level, selected=controls, flags=flags)


def _post_selection(data: Dataset, sets: SelectionSets, selected, level: float) -> EstimateReport:
    flags = []
    if not sets.converged:
        flags.append(NONCONVERGED_FLAG)
    selected, truncated = guard_selection(selected, data.n, sets.strength(data.p))
    if truncated:
        flags.append(DOF_FLAG)
    return ols_on_controls(data, selected, level, flags)


def double_selection(data: Dataset, config: PenaltyConfig = PenaltyConfig(), level: float = 0.95,
                     sets: Optional[SelectionSets] = None) -> EstimateReport:
    if sets is None:
        sets = selection_sets(data, config, include_i3=False)
    union = sorted(set(sets.i1) | set(sets.i2))
    return _post_selection(data, sets, union, level)


def ds_plus_i3(data: Dataset, config: PenaltyConfig = PenaltyConfig(), level: float = 0.95,
               sets: Optional[SelectionSets] = None) -> EstimateReport:
    if sets is None or sets.i3 is None:
        sets = selection_sets(data, config, include_i3=True)
    return _post_selection(data, sets, sets.union, level)


def single_selection_post_lasso(data: Dataset, config: PenaltyConfig = PenaltyConfig(),
                                level: float = 0.95, sets: Optional[SelectionSets] = None) -> EstimateReport:
    """Post-Lasso on the outcome equation only (d kept unpenalized)."""
    if sets is None or sets.fit_yd is None:
        fit = select_outcome_given_treatment(data, config)
        sets = SelectionSets((), (), _tupled(fit.penalized_support() - 1), fit_yd=fit)
    only = SelectionSets((), (), sets.i3, fit_yd=sets.fit_yd)
    return _post_selection(data, only, sets.i3, level)


def lasso_direct(data: Dataset, config: PenaltyConfig = PenaltyConfig(), level: float = 0.95,
                 sets: Optional[SelectionSets] = None) -> EstimateReport:
    """d's coefficient from the Lasso of y on (d, X); the se comes from OLS
    on the Lasso-active set, the interval is centred at the Lasso estimate."""
    if sets is None or sets.fit_yd is None:
        fit = select_outcome_given_treatment(data, config)
        sets = SelectionSets((), (), _tupled(fit.penalized_support() - 1), fit_yd=fit)
    ols = _post_selection(data, SelectionSets((), (), sets.i3, fit_yd=sets.fit_yd), sets.i3, level)
    a = float(sets.fit_yd.coef[0])
    z = normal_quantile(level)
    return EstimateReport(a, ols.se, a - z * ols.se, a + z * ols.se, level, ols.selected, ols.flags)


def union_ads(ds_report: EstimateReport, post_lasso_report: EstimateReport) -> EstimateReport:
    """Convex hull of the two intervals; the point estimate is its midpoint."""
    if not np.isclose(ds_report.level, post_lasso_report.level, rtol=0, atol=1e-12):
        raise ValueError("reports have different confidence levels")
    lo = min(ds_report.ci_lower, post_lasso_report.ci_lower)
    hi = max(ds_report.ci_upper, post_lasso_report.ci_upper)
    z = normal_quantile(ds_report.level)
    mid = 0.5 * (lo + hi)
    se = (hi - lo) / (2.0 * z)
    selected = tuple(sorted(set(ds_report.selected) | set(post_lasso_report.selected)))
    flags = tuple(dict.fromkeys(ds_report.flags + post_lasso_report.flags))
    return EstimateReport(mid, se, lo, hi, ds_report.level, selected, flags)


def oracle(data: Dataset, level: float = 0.95) -> EstimateReport:
    """OLS of y on (d, x'(c_y beta0)) using the true outcome index."""
    if data.truth is None:
        raise ValueError("oracle estimators need data.truth")
    Z = np.column_stack([data.d, data.truth.signal_y])
    return report_from_ols(ols_fit(Z, data.y), Z, level, selected=data.truth.support_y)


def ds_oracle(data: Dataset, level: float = 0.95) -> EstimateReport:
    """OLS of y on (d, x'(c_y beta0), x'(c_d beta1))."""
    if data.truth is None:
        raise ValueError("oracle estimators need data.truth")
    Z = np.column_stack([data.d, data.truth.signal_y, data.truth.signal_d])
    support = tuple(sorted(set(data.truth.support_y) | set(data.truth.support_d)))
    return report_from_ols(ols_fit(Z, data.y), Z, level, selected=support)


# --- p = 1 illustration ------------------------------------------------------

def _conventional_t(Z: np.ndarray, v: np.ndarray, col: int) -> float:
    fit = ols_fit(Z, v)
    if fit.dof < 1:
        return np.inf
    s2 = fit.residuals @ fit.residuals / fit.dof
    inv = np.linalg.pinv(Z.T @ Z)
    se = np.sqrt(s2 * inv[col, col])
    return abs(fit.coef[col]) / se if se > 0 else np.inf


def p1_draw(beta_g: float, beta_m: float, n: int, rng: np.random.Generator,
            alpha0: float = 0.5, sigma_zeta: float = 1.0, sigma_v: float = 1.0) -> Dataset:
    x = rng.standard_normal(n)
    d = beta_m * x + sigma_v * rng.standard_normal(n)
    y = alpha0 * d + beta_g * x + sigma_zeta * rng.standard_normal(n)
    return Dataset(y, d, x[:, None])


def p1_estimates(data: Dataset, level: float = 0.95) -> tuple[EstimateReport, EstimateReport]:
    """Single and double selection with conservative t-tests as selectors.

    Single keeps x iff |t| of x in y ~ d + x exceeds Phi^-1(1 - 1/(2n));
    double also keeps x iff |t| in d ~ x exceeds it.
    """
    n = data.n
    thr = stats.norm.ppf(1.0 - 1.0 / (2.0 * n))
    x = data.X[:, 0]
    t_g = _conventional_t(np.column_stack([data.d, x]), data.y, 1)
    t_m = _conventional_t(x[:, None], data.d, 0)
    keep_single = t_g > thr
    keep_double = keep_single or t_m > thr
    single = ols_on_controls(data, (0,) if keep_single else (), level)
    double = ols_on_controls(data, (0,) if keep_double else (), level)
    return single, double
