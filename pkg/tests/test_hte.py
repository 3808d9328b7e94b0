import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from postdouble import hte
from postdouble.hte import (ArmSizeError, NuisanceFits, ate_estimate, ate_from_fits, att_estimate,
                            att_from_fits, dictionary, fit_nuisances, immunization_check, phi, phi_tilde)


def test_phi_examples():
    assert phi(0.3, 2.0, 1.0, 0.4, 2.0, 0.7) == pytest.approx(0.3 - (2.0 - 0.4))
    assert phi(0.5, 1.0, 1.0, 0.0, 0.5, 0.5) == pytest.approx(-1.0)


def test_phi_tilde_examples():
    assert phi_tilde(0.2, 0.7, 0.0, 0.7, 1.3, 0.4, 0.5) == 0.0
    assert phi_tilde(0.0, 1.0, 1.0, 0.0, 1.0, 0.5, 0.5) == pytest.approx(2.0)


@settings(max_examples=50)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([0.0, 1.0]),
       st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 0.95), st.floats(0.05, 1.0))
def test_moment_structure(a, delta, y, d, g0, g1, m, mu):
    assert phi(a + delta, y, d, g0, g1, m) - phi(a, y, d, g0, g1, m) == pytest.approx(delta, abs=1e-9)
    diff = phi_tilde(a + delta, y, d, g0, g1, m, mu) - phi_tilde(a, y, d, g0, g1, m, mu)
    assert diff == pytest.approx(-delta * d / mu, abs=1e-8)


def test_propensity_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        phi(0.0, 1.0, 1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        phi_tilde(0.0, 1.0, 1.0, 0.0, 0.0, 0.5, 0.0)


def test_null_model_nuisances():
    rng = np.random.default_rng(0)
    n = 400
    X = rng.standard_normal((n, 20))
    d = (rng.random(n) < 0.5).astype(float)
    y = 2.0 + rng.standard_normal(n)
    fits = fit_nuisances(y, d, X)
    assert fits.selected_g == () and fits.selected_m == ()
    W = dictionary(X)
    np.testing.assert_allclose(fits.g1(W), y[d == 1].mean())
    np.testing.assert_allclose(fits.g0(W), y[d == 0].mean())
    np.testing.assert_allclose(fits.m(W), np.clip(d.mean(), 0.01, 0.99))


def _sparse_binary(seed, n=300, p=50):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    idx = 0.8 * X[:, 0] - 0.6 * X[:, 1] + 0.4 * X[:, 2]
    d = (rng.random(n) < 1 / (1 + np.exp(-idx))).astype(float)
    y = d + X[:, 0] + 0.5 * X[:, 3] + rng.standard_normal(n)
    return y, d, X


def test_linear_propensity_is_sparse():
    s = 3
    good = 0
    for seed in range(100):
        y, d, X = _sparse_binary(seed)
        # indices are over w = (1, x), so the true propensity support is {1, 2, 3}
        sel = set(fit_nuisances(y, d, X, "linear").selected_m)
        good += len(sel) <= 3 * s and len(sel - {1, 2, 3}) <= 1
    assert good > 50


def test_logit_and_linear_propensities_agree():
    y, d, X = _sparse_binary(3, n=500)
    W = dictionary(X)
    m_lin = fit_nuisances(y, d, X, "linear").m(W)
    m_log = fit_nuisances(y, d, X, "logit").m(W)
    assert np.corrcoef(m_lin, m_log)[0, 1] > 0.9


def test_trimmed_propensities_in_bounds():
    y, d, X = _sparse_binary(4)
    W = dictionary(X)
    for link in ("linear", "logit"):
        m = fit_nuisances(y, d, X, link, trim_eps=0.05).m(W)
        assert m.min() >= 0.05 and m.max() <= 0.95


def test_randomized_ate_near_one():
    rng = np.random.default_rng(10)
    n = 2000
    X = rng.standard_normal((n, 30))
    d = (rng.random(n) < 0.5).astype(float)
    y = d + rng.standard_normal(n)
    rep = ate_estimate(y, d, X)
    assert abs(rep.effect_hat - 1) < 0.1


def _fixed_fits(k, g0=0.0, g1=0.0, m=0.5):
    b0, b1, bm = np.zeros(k), np.zeros(k), np.zeros(k)
    b0[0], b1[0], bm[0] = g0, g1, m
    return NuisanceFits(b0, b1, bm)


def test_degenerate_zero_effects():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 3))
    d = np.tile([0.0, 1.0], 15)
    y = np.zeros(30)
    fits = _fixed_fits(4, 0.7, 0.7)
    assert ate_from_fits(y, d, X, fits).effect_hat == 0.0
    assert att_from_fits(y, d, X, _fixed_fits(4)).effect_hat == 0.0


def test_estimating_equations_and_se_self_consistency():
    y, d, X = _sparse_binary(6)
    W = dictionary(X)
    fits = fit_nuisances(y, d, X)
    ate = ate_from_fits(y, d, X, fits)
    m = fits.m(W)
    score = phi(ate.effect_hat, y, d, fits.g0(W), fits.g1(W), m)
    assert abs(score.mean()) < 1e-12
    assert ate.se == pytest.approx(np.sqrt(np.mean(score ** 2) / len(y)), rel=1e-12)
    att = att_from_fits(y, d, X, fits)
    st_ = phi_tilde(att.effect_hat, y, d, fits.g0(W), fits.g1(W), m, att.mu_hat)
    assert abs(st_.mean()) < 1e-12
    assert att.se == pytest.approx(np.sqrt(np.mean(st_ ** 2) / len(y)), rel=1e-12)


def test_homogeneous_effect_with_true_nuisances():
    rng = np.random.default_rng(2)
    n, tau = 200, 1.5
    X = rng.standard_normal((n, 2))
    d = (rng.random(n) < 0.4).astype(float)
    b0 = np.array([0.3, 1.0, -0.5])
    b1 = b0 + np.array([tau, 0, 0])
    W = dictionary(X)
    y = np.where(d == 1, W @ b1, W @ b0)
    fits = NuisanceFits(b0, b1, np.array([0.4, 0, 0]))
    a, g = ate_from_fits(y, d, X, fits), att_from_fits(y, d, X, fits)
    assert a.effect_hat == pytest.approx(tau, abs=1e-12)
    assert g.effect_hat == pytest.approx(tau, abs=1e-12)


def test_arm_errors():
    X = np.zeros((6, 1))
    with pytest.raises(ArmSizeError, match="no treated observations"):
        att_estimate(np.ones(6), np.zeros(6), X)
    with pytest.raises(ArmSizeError):
        fit_nuisances(np.ones(6), np.array([1.0, 0, 0, 0, 0, 0]), X)
    with pytest.raises(ValueError):
        fit_nuisances(np.ones(6), np.array([2.0, 0, 1, 0, 1, 0]), X)


def test_union_option_uses_common_support():
    y, d, X = _sparse_binary(8)
    fits = fit_nuisances(y, d, X, union=True)
    # coefficient j of beta is the w-column j; column 0 is the intercept
    support = set(np.flatnonzero(fits.beta_m[1:]) + 1) | set(np.flatnonzero(fits.beta_g0[1:]) + 1)
    assert support <= set(fits.selected_g) | set(fits.selected_m)


def test_immunization_trivial_directions():
    y, d, X = _sparse_binary(9)
    fits = fit_nuisances(y, d, X)
    k = X.shape[1] + 1
    assert immunization_check(y, d, X, fits, np.zeros(k), 1e-3, "g0") == 0.0
    assert immunization_check(y, d, X, fits, 1.0, 1e-3, "alpha") == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        immunization_check(y, d, X, fits, np.zeros(k), 0.0, "g0")
    with pytest.raises(ValueError):
        immunization_check(y, d, X, fits, np.zeros(3), 1e-3, "m")


def true_model(seed, n=5000, p=10):
    """Linear outcome regressions and linear propensity on uniform controls."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, p))
    bm = np.zeros(p + 1)
    bm[[0, 1]] = [0.5, 0.2]
    b0 = np.zeros(p + 1)
    b0[[0, 1, 2]] = [0.0, 1.0, 0.5]
    b1 = b0.copy()
    b1[[0, 3]] = [1.0, 0.7]
    W = dictionary(X)
    d = (rng.random(n) < W @ bm).astype(float)
    y = np.where(d == 1, W @ b1, W @ b0) + 0.5 * rng.standard_normal(n)
    fits = NuisanceFits(b0, b1, bm)
    alpha = float(np.mean(W @ (b1 - b0)))
    return y, d, X, fits, alpha


def max_derivative(seed):
    y, d, X, fits, alpha = true_model(seed)
    worst = 0.0
    for block in ("g0", "g1", "m"):
        for j in range(X.shape[1] + 1):
            u = np.zeros(X.shape[1] + 1)
            u[j] = 1.0
            worst = max(worst, abs(immunization_check(y, d, X, fits, u, 1e-4, block, alpha)))
    return worst, len(y)


def test_immunization_at_truth():
    worst, n = max_derivative(0)
    assert worst < 5 / np.sqrt(n)
