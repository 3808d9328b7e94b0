"""Compiled coordinate-descent inner loops.

Both solvers minimise ``loss(beta) + sum_j pen[j] * |beta[j]|`` where the
loss is an average over rows. They update ``beta`` in place and return
``(sweeps, converged)``; ``trace[k]`` receives the objective after sweep k.
"""

import warnings

import numpy as np
from numba import njit
from numba.core.errors import NumbaPerformanceWarning

# column slices of a single-column (C-ordered) design trigger a harmless hint
warnings.filterwarnings("ignore", category=NumbaPerformanceWarning)


@njit(cache=True, nogil=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True, nogil=True)
def _ls_objective(r, beta, pen, n):
    return np.dot(r, r) / n + np.sum(pen * np.abs(beta))


@njit(cache=True, nogil=True)
def lasso_ls(X, y, pen, beta, tol, max_iter, trace):
    """Least squares: loss = mean((y - X beta)^2)."""
    n, p = X.shape
    col_sq = np.empty(p)
    for j in range(p):
        col_sq[j] = np.dot(X[:, j], X[:, j]) / n
    r = y - X @ beta
    active = np.zeros(p, dtype=np.bool_)
    sweeps = 0
    full = True
    converged = False
    while sweeps < max_iter:
        max_step = 0.0
        for j in range(p):
            if not full and not active[j]:
                continue
            a = col_sq[j]
            if a == 0.0:
                beta[j] = 0.0
                continue
            old = beta[j]
            z = np.dot(X[:, j], r) / n + a * old
            new = _soft(z, 0.5 * pen[j]) / a
            if new != old:
                diff = new - old
                r -= diff * X[:, j]
                beta[j] = new
                if abs(diff) > max_step:
                    max_step = abs(diff)
            active[j] = beta[j] != 0.0 or pen[j] == 0.0
        trace[sweeps] = _ls_objective(r, beta, pen, n)
        sweeps += 1
        if max_step < tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return sweeps, converged


@njit(cache=True, nogil=True)
def _log1pexp(t):
    if t > 0:
        return t + np.log1p(np.exp(-t))
    return np.log1p(np.exp(t))


@njit(cache=True, nogil=True)
def _sigmoid(t):
    if t >= 0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _logit_loss(eta, d, n):
    s = 0.0
    for i in range(n):
        s += _log1pexp(eta[i]) - d[i] * eta[i]
    return s / n


@njit(cache=True, nogil=True)
def _logit_coord_loss(eta, xj, d, delta, n):
    s = 0.0
    for i in range(n):
        t = eta[i] + delta * xj[i]
        s += _log1pexp(t) - d[i] * t
    return s / n


@njit(cache=True, nogil=True)
def lasso_logit(X, d, pen, beta, tol, max_iter, trace):
    """Logistic: loss = mean(log(1 + exp(eta)) - d * eta), eta = X beta.

    Each coordinate tries a Newton-curvature step and falls back to the
    curvature bound 1/4 (a majoriser) if the Newton step does not descend,
    so the objective never increases.
    """
    n, p = X.shape
    col_sq = np.empty(p)
    for j in range(p):
        col_sq[j] = np.dot(X[:, j], X[:, j]) / n
    eta = X @ beta
    prob = np.empty(n)
    active = np.zeros(p, dtype=np.bool_)
    sweeps = 0
    full = True
    converged = False
    while sweeps < max_iter:
        max_step = 0.0
        for j in range(p):
            if not full and not active[j]:
                continue
            if col_sq[j] == 0.0:
                beta[j] = 0.0
                continue
            xj = X[:, j]
            g = 0.0
            h = 0.0
            for i in range(n):
                prob[i] = _sigmoid(eta[i])
                g += xj[i] * (prob[i] - d[i])
                h += xj[i] * xj[i] * prob[i] * (1.0 - prob[i])
            g /= n
            h /= n
            old = beta[j]
            base = _logit_coord_loss(eta, xj, d, 0.0, n) + pen[j] * abs(old)
            bound = 0.25 * col_sq[j]
            new = old
            if h > 1e-12 * col_sq[j]:
                cand = _soft(h * old - g, pen[j]) / h
                val = _logit_coord_loss(eta, xj, d, cand - old, n) + pen[j] * abs(cand)
                if val <= base:
                    new = cand
            if new == old:
                cand = _soft(bound * old - g, pen[j]) / bound
                val = _logit_coord_loss(eta, xj, d, cand - old, n) + pen[j] * abs(cand)
                if val <= base:
                    new = cand
            if new != old:
                diff = new - old
                for i in range(n):
                    eta[i] += diff * xj[i]
                beta[j] = new
                if abs(diff) > max_step:
                    max_step = abs(diff)
            active[j] = beta[j] != 0.0 or pen[j] == 0.0
        trace[sweeps] = _logit_loss(eta, d, n) + np.sum(pen * np.abs(beta))
        sweeps += 1
        if max_step < tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return sweeps, converged
