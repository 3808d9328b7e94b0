import numpy as np
import pytest

from postdouble import selection as sel
from postdouble.dgp import DesignSpec, generate
from postdouble.lasso import PenaltyConfig
from postdouble.montecarlo import p1_ttest_demo
from postdouble.regression import Dataset, EstimateReport, ols_fit

CFG = PenaltyConfig()


def bivariate(data):
    return ols_fit(data.d[:, None], data.y).coef[0]


def noise_data(seed, n=400, p=50):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(n)
    return Dataset(0.5 * d + rng.standard_normal(n), d, rng.standard_normal((n, p)))


def test_null_selection_is_bivariate_ols():
    data = noise_data(1)
    rep = sel.double_selection(data, CFG)
    assert rep.selected == ()
    assert rep.alpha_hat == pytest.approx(bivariate(data), abs=1e-12)
    assert rep.ci_lower < rep.alpha_hat < rep.ci_upper


def test_p1_both_equations_select_x():
    data = sel.p1_draw(1.0, 1.0, 500, np.random.default_rng(3))
    sets = sel.selection_sets(data, CFG)
    assert sets.i1 == (0,) and sets.i2 == (0,)
    rep = sel.double_selection(data, CFG, sets=sets)
    assert abs(rep.alpha_hat - 0.5) < 3 * rep.se


def test_permuting_controls_leaves_estimate_unchanged():
    data = generate(DesignSpec("1", 100, 60, 0.4, 0.4), np.random.default_rng(5)).data
    perm = np.random.default_rng(0).permutation(data.p)
    shuffled = Dataset(data.y, data.d, data.X[:, perm])
    a, b = sel.double_selection(data, CFG), sel.double_selection(shuffled, CFG)
    assert a.alpha_hat == pytest.approx(b.alpha_hat, abs=1e-6)
    assert a.se == pytest.approx(b.se, abs=1e-6)
    assert sorted(perm[list(b.selected)]) == list(a.selected)


def test_single_selection_null_outcome_equation():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((300, 40))
    d = X[:, 0] + rng.standard_normal(300)
    data = Dataset(0.5 * d + rng.standard_normal(300), d, X)
    rep = sel.single_selection_post_lasso(data, CFG)
    assert rep.selected == ()
    assert rep.alpha_hat == pytest.approx(bivariate(data), abs=1e-12)


def test_single_selection_bad_sequence_over_rejects():
    n = 100
    beta_g = np.sqrt(np.log(n) / n)
    rejects = 0
    for r in range(1000):
        data = sel.p1_draw(beta_g, 2.0, n, np.random.default_rng([17, r]))
        rejects += not sel.single_selection_post_lasso(data, CFG).covers(0.5)
    assert rejects / 1000 > 0.10


def test_lasso_direct_large_lambda_is_bivariate():
    data = noise_data(2)
    rep = sel.lasso_direct(data, PenaltyConfig(lam=1e9))
    assert rep.selected == ()
    assert rep.alpha_hat == pytest.approx(bivariate(data), abs=1e-8)


def test_lasso_direct_pure_noise():
    data = noise_data(4)
    rep = sel.lasso_direct(data, CFG)
    assert rep.selected == ()
    assert rep.alpha_hat == pytest.approx(bivariate(data), abs=1e-8)


def test_lasso_direct_approaches_active_set_ols():
    data = generate(DesignSpec("1", 200, 30, 0.5, 0.5), np.random.default_rng(8)).data
    gaps = []
    for lam in (40.0, 10.0, 1.0):
        rep = sel.lasso_direct(data, PenaltyConfig(lam=lam))
        ols = sel.ols_on_controls(data, rep.selected, 0.95)
        gaps.append(abs(rep.alpha_hat - ols.alpha_hat))
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_ds_plus_i3_subset_case_and_monotone():
    for seed in range(6):
        data = generate(DesignSpec("1", 100, 200, 0.4, 0.4), np.random.default_rng(seed)).data
        sets = sel.selection_sets(data, CFG)
        ds = sel.double_selection(data, CFG, sets=sets)
        i3 = sel.ds_plus_i3(data, CFG, sets=sets)
        assert i3.s_hat >= ds.s_hat
        if set(sets.i3) <= set(sets.i1) | set(sets.i2):
            assert i3 == ds


def test_ds_plus_i3_seeded_design1():
    # at R^2 = .4/.4 the structural x-coefficients are too small for I3 to pick
    # anything up at n = 100, so use the strong-outcome grid point
    data = generate(DesignSpec("1", 100, 200, 0.8, 0.2), np.random.default_rng(2)).data
    sets = sel.selection_sets(data, CFG)
    assert len(sets.i3) > 0
    rep = sel.ds_plus_i3(data, CFG, sets=sets)
    assert np.isfinite(rep.alpha_hat) and rep.ci_lower <= rep.alpha_hat <= rep.ci_upper


def _rep(lo, hi, level=0.95):
    return EstimateReport((lo + hi) / 2, 0.1, lo, hi, level, (), ())


def test_union_ads_arithmetic():
    same = sel.union_ads(_rep(0, 1), _rep(0, 1))
    assert (same.ci_lower, same.ci_upper, same.alpha_hat) == (0, 1, 0.5)
    u = sel.union_ads(_rep(0, 1), _rep(0.5, 2))
    assert (u.ci_lower, u.ci_upper, u.alpha_hat) == (0, 2, 1.0)
    u = sel.union_ads(_rep(0, 1), _rep(2, 3))
    assert (u.ci_lower, u.ci_upper, u.alpha_hat) == (0, 3, 1.5)
    with pytest.raises(ValueError):
        sel.union_ads(_rep(0, 1), _rep(0, 1, 0.9))


def test_oracles():
    data = generate(DesignSpec("1", 100, 50, 0.4, 0.4), np.random.default_rng(0)).data
    # beta1 = beta0, so the two signals are proportional and one is dropped
    a, b = sel.oracle(data), sel.ds_oracle(data)
    assert a.alpha_hat == pytest.approx(b.alpha_hat, abs=1e-10)
    assert a.se == pytest.approx(b.se, abs=1e-10)
    null = generate(DesignSpec("1", 100, 50, 0.0, 0.0), np.random.default_rng(0)).data
    for rep in (sel.oracle(null), sel.ds_oracle(null)):
        assert rep.alpha_hat == pytest.approx(bivariate(null), abs=1e-12)
    with pytest.raises(ValueError):
        sel.oracle(Dataset(null.y, null.d, null.X))


def test_zero_lambda_double_selection_is_long_regression():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((80, 10))
    d = X[:, 0] + rng.standard_normal(80)
    y = 0.5 * d + X[:, 1] + rng.standard_normal(80)
    data = Dataset(y, d, X)
    rep = sel.double_selection(data, PenaltyConfig(lam=0.0, tol=1e-12))
    assert rep.selected == tuple(range(10))
    assert rep.alpha_hat == pytest.approx(ols_fit(np.column_stack([d, X]), y).coef[0], abs=1e-10)


def test_fixed_selection_ignores_extra_noise_column():
    data = generate(DesignSpec("1", 100, 40, 0.4, 0.4), np.random.default_rng(3)).data
    extra = Dataset(data.y, data.d, np.column_stack([data.X, np.random.default_rng(1).standard_normal(100)]))
    a = sel.ols_on_controls(data, (0, 1, 10), 0.95)
    b = sel.ols_on_controls(extra, (0, 1, 10), 0.95)
    assert a.alpha_hat == b.alpha_hat and a.se == b.se


def test_guard_selection_truncates_by_strength():
    strength = np.array([0.1, 5.0, 0.2, 3.0, 0.0])
    kept, flagged = sel.guard_selection([0, 1, 2, 3], n=4, strength=strength)
    assert flagged and kept == (1, 3)
    kept, flagged = sel.guard_selection([0, 1], n=4, strength=strength)
    assert not flagged and kept == (0, 1)


def test_guard_applied_in_estimator():
    data = generate(DesignSpec("1", 12, 60, 0.8, 0.8), np.random.default_rng(4)).data
    rep = sel.double_selection(data, PenaltyConfig(lam=0.5))
    assert rep.s_hat <= data.n - 2
    assert sel.DOF_FLAG in rep.flags


def test_p1_demo_null_coverage():
    res = p1_ttest_demo(0.0, 0.0, 100, 1000, seed=1)
    for name in ("single", "double"):
        assert 0.92 <= res[name].coverage_95 <= 0.98
        assert res[name].mean_s_hat < 0.05


def test_p1_demo_threshold_sequence():
    n = 100
    res = p1_ttest_demo(np.sqrt(np.log(n)) / np.sqrt(n), 2.0, n, 2000, seed=2)
    assert res["single"].coverage_95 < res["double"].coverage_95


def test_p1_demo_strong_signal_agrees():
    res = p1_ttest_demo(10.0, 1.0, 100, 1000, seed=3)
    assert res["single"].mean_s_hat == 1.0 and res["double"].mean_s_hat == 1.0
    assert abs(res["single"].coverage_95 - res["double"].coverage_95) <= 0.02
