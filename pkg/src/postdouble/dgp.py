"""Simulation designs for the partially linear model

    y = alpha0 d + x'(c_y beta0) + sigma_y(d, x) zeta
    d* = x'(c_d beta1) + sigma_d(x) v,   d = d* or 1{d* > 0}

with x ~ N(0, Sigma), Sigma_kj = 0.5^|k-j|, and zeta, v independent N(0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .regression import Dataset, Truth

BASE_DESIGNS = ("1", "2", "22", "3", "4", "44", "5", "6", "7", "72", "722", "8", "1001")
DESIGNS = BASE_DESIGNS + tuple(d + "a" for d in BASE_DESIGNS)
HETEROSCEDASTIC = frozenset({"3", "4", "44"})
BINARY = frozenset({"5"})
RANDOM_COEF = frozenset({"6", "7", "72", "722", "8"})
TOEPLITZ_BASE = 0.5


class UnknownDesignError(ValueError):
    def __init__(self, design):
        super().__init__(f"unknown design {design!r}; valid designs: {', '.join(DESIGNS)}")


def check_design(design_id) -> str:
    key = str(design_id).strip()
    if key not in DESIGNS:
        raise UnknownDesignError(design_id)
    return key


def _base(design_id: str) -> str:
    return design_id[:-1] if design_id.endswith("a") else design_id


@dataclass(frozen=True)
class DesignSpec:
    design_id: str = "1"
    n: int = 100
    p: int = 200
    r2_y: float = 0.0
    r2_d: float = 0.0
    alpha0: float = 0.5
    seed: int = 0
    # literal c_y for the "a" designs: scale it with R^2_d instead of R^2_y
    literal_cy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "design_id", check_design(self.design_id))
        for name in ("r2_y", "r2_d"):
            r2 = getattr(self, name)
            if not 0.0 <= r2 < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {r2}")
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")

    @property
    def is_a(self) -> bool:
        return self.design_id.endswith("a")

    @property
    def heteroscedastic(self) -> bool:
        return _base(self.design_id) in HETEROSCEDASTIC

    @property
    def binary(self) -> bool:
        return _base(self.design_id) in BINARY

    @property
    def random_coefficients(self) -> bool:
        return _base(self.design_id) in RANDOM_COEF


@dataclass(frozen=True)
class GeneratedSample:
    data: Dataset
    c_y: float
    c_d: float
    beta0: np.ndarray
    beta1: np.ndarray


def toeplitz_sigma(p: int, rho: float = TOEPLITZ_BASE):
    """Sigma_kj = rho^|k-j| and its lower Cholesky factor."""
    if p < 1:
        raise ValueError("p must be >= 1")
    sigma = linalg.toeplitz(rho ** np.arange(p))
    return sigma, np.linalg.cholesky(sigma)


def quad_form(beta, sigma) -> float:
    beta = np.asarray(beta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (beta.size, beta.size):
        raise ValueError("dimension mismatch between beta and Sigma")
    return float(beta @ sigma @ beta)


def _check_r2(*r2s):
    for r2 in r2s:
        if not 0.0 <= r2 < 1.0:
            raise ValueError(f"R^2 must lie in [0, 1), got {r2}")


def _scale(r2: float, q: float) -> float:
    if r2 == 0.0:
        return 0.0
    if q <= 0.0:
        raise ValueError("beta' Sigma beta must be positive for a non-zero R^2")
    return float(np.sqrt(r2 / ((1.0 - r2) * q)))


def calibrate_first13(r2_y: float, r2_d: float, alpha0: float, beta0, sigma) -> tuple[float, float]:
    """Scales for designs with beta1 = beta0.

    c_d targets R^2 of d on x; c_y targets R^2 of the reduced form of y on x,
    whose noise variance is alpha0^2 + 1, so c_y = -alpha0 c_d + ... and
    R^2_y = 0 gives c_y = -alpha0 c_d.
    """
    _check_r2(r2_y, r2_d)
    q = quad_form(beta0, sigma)
    c_d = _scale(r2_d, q)
    if q <= 0.0:
        if r2_y > 0.0:
            raise ValueError("beta' Sigma beta must be positive for a non-zero R^2")
        return 0.0, c_d
    num = -(1 - r2_y) * alpha0 * c_d * q + np.sqrt((1 - r2_y) * r2_y * q * (alpha0 ** 2 + 1))
    return float(num / ((1 - r2_y) * q)), c_d


def calibrate_last13(r2_y: float, r2_d: float, beta0, beta1, sigma,
                     literal: bool = False) -> tuple[float, float]:
    """c_d = sqrt(R2_d / ((1-R2_d) b1'S b1)), c_y = sqrt(R2_y / ((1-R2_y) b0'S b0)).

    ``literal=True`` uses R2_d inside c_y instead of R2_y.
    """
    _check_r2(r2_y, r2_d)
    c_d = _scale(r2_d, quad_form(beta1, sigma))
    c_y = _scale(r2_d if literal else r2_y, quad_form(beta0, sigma))
    return c_y, c_d


def _pattern(kind: str, p: int) -> np.ndarray:
    m = max(p, 40)
    j = np.arange(1, m + 1, dtype=float)
    b = np.zeros(m)
    if kind in ("harmonic", "sq_harmonic"):
        # (1, 1/2, .., 1/5, 0 x5, 1, 1/2, .., 1/5, 0, ...) or its squares
        head = 1.0 / np.arange(1, 6) ** (1 if kind == "harmonic" else 2)
        b[:5] = head
        b[10:15] = head
    elif kind == "harmonic10":
        b[:10] = 1.0 / j[:10]
    elif kind == "sq_harmonic10":
        b[:10] = 1.0 / j[:10] ** 2
    elif kind == "dense_sq":
        b = 1.0 / j ** 2
    elif kind == "even40":
        b[(j <= 40) & (j % 2 == 0)] = 1.0
    elif kind == "odd40":
        b[(j <= 39) & (j % 2 == 1)] = 1.0
    else:  # pragma: no cover
        raise KeyError(kind)
    return b[:p]


# fixed shapes for (beta0, beta1-in-"a"-design) per base design
_SHAPES = {
    "1": ("harmonic", "harmonic10"),
    "2": ("sq_harmonic", "sq_harmonic10"),
    "22": ("dense_sq", "dense_sq"),
    "3": ("harmonic", "harmonic10"),
    "4": ("sq_harmonic", "sq_harmonic10"),
    "44": ("dense_sq", "dense_sq"),
    "5": ("harmonic", "harmonic10"),
    "7": ("harmonic", "harmonic10"),
    "72": ("sq_harmonic", "sq_harmonic10"),
    "722": ("dense_sq", "dense_sq"),
    "1001": ("even40", "odd40"),
}

CORR_A = 0.8


def _correlated_normals(p, rng):
    z0 = rng.standard_normal(p)
    z1 = CORR_A * z0 + np.sqrt(1.0 - CORR_A ** 2) * rng.standard_normal(p)
    return z0, z1


def make_beta(design_id, p: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(beta0, beta1) for a design; random designs consume ``rng``."""
    design_id = check_design(design_id)
    base, is_a = _base(design_id), design_id.endswith("a")
    if base == "6":
        if is_a:
            return _correlated_normals(p, rng)
        b = rng.standard_normal(p)
        return b, b.copy()
    if base == "8":
        u = rng.random(p) < 0.05
        if is_a:
            b0 = np.where(u, 5.0 * rng.standard_normal(p), 0.05 * rng.standard_normal(p))
            b1 = np.where(u, 5.0 * rng.standard_normal(p), 0.05 * rng.standard_normal(p))
            return b0, b1
        # N(0, 25) and N(0, .0025)
        b = np.where(u, 5.0 * rng.standard_normal(p), 0.05 * rng.standard_normal(p))
        return b, b.copy()
    shape0, shape1 = _SHAPES[base]
    b0 = _pattern(shape0, p)
    b1 = _pattern(shape1, p) if is_a else b0.copy()
    if base in ("7", "72", "722"):
        if is_a:
            z0, z1 = _correlated_normals(p, rng)
            return b0 * z0, b1 * z1
        b = b0 * rng.standard_normal(p)
        return b, b.copy()
    return b0, b1


def _het_scale(index: np.ndarray) -> np.ndarray:
    s2 = index ** 2
    return np.sqrt(s2 / s2.mean())


def generate(spec: DesignSpec, rng: np.random.Generator | None = None,
             sigma_factor=None) -> GeneratedSample:
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    if sigma_factor is None:
        sigma, chol = toeplitz_sigma(spec.p)
    else:
        sigma, chol = sigma_factor
    beta0, beta1 = make_beta(spec.design_id, spec.p, rng)
    if spec.is_a:
        c_y, c_d = calibrate_last13(spec.r2_y, spec.r2_d, beta0, beta1, sigma, spec.literal_cy)
    else:
        c_y, c_d = calibrate_first13(spec.r2_y, spec.r2_d, spec.alpha0, beta0, sigma)
    n = spec.n
    X = rng.standard_normal((n, spec.p)) @ chol.T
    zeta = rng.standard_normal(n)
    v = rng.standard_normal(n)
    signal_d = X @ (c_d * beta1)
    signal_y = X @ (c_y * beta0)
    sigma_d = _het_scale(1.0 + X @ beta1) if spec.heteroscedastic else 1.0
    d_star = signal_d + sigma_d * v
    d = (d_star > 0).astype(float) if spec.binary else d_star
    sigma_y = _het_scale(1.0 + spec.alpha0 * d + X @ beta0) if spec.heteroscedastic else 1.0
    y = spec.alpha0 * d + signal_y + sigma_y * zeta
    truth = Truth(spec.alpha0, tuple(np.flatnonzero(beta0).tolist()), tuple(np.flatnonzero(beta1).tolist()),
                  signal_y, signal_d)
    return GeneratedSample(Dataset(y, d, X, truth), float(c_y), float(c_d), beta0, beta1)


def population_r2_d(c_d: float, beta1, sigma) -> float:
    """Population R^2 of d* on x in homoscedastic designs."""
    s = c_d ** 2 * quad_form(beta1, sigma)
    return s / (s + 1.0)
