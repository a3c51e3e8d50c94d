"""Multivariate t distribution core.

Density, q-deformed logarithm, sampler, conditional expectations of the
latent mixing variable, and the two degrees-of-freedom score functions
(the plain likelihood score and its density-power-weighted counterpart).

All density work happens in log space. The weight f(x)^(1-q) is always
computed as exp((1 - q) * log_pdf(x)), because (nu + s) raised to the
composite exponents involved here overflows or underflows quickly at the
large Mahalanobis distances that the robustness analysis is about.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainError
from .linalg import cholesky_lower, mahalanobis_sq_from_chol, symmetrize
from .special import digamma, log_gamma

__all__ = [
    "MvtParams",
    "as_data_matrix",
    "log_pdf",
    "log_pdf_rows",
    "lq_transform",
    "lq_from_log",
    "sample",
    "cond_expect_u",
    "cond_expect_log_u",
    "ml_score_nu",
    "mlq_score_nu",
    "score_curve",
]

# Below this distance from 1.0, q is treated as exactly 1 (plain logarithm).
_Q_ONE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MvtParams:
    """Parameter triple (location, scatter, degrees of freedom).

    The scatter matrix is symmetrized on construction and must be positive
    definite; its lower Cholesky factor is cached because every density and
    weight evaluation needs it.
    """

    mu: np.ndarray
    sigma: np.ndarray
    nu: float
    chol_lower: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if mu.ndim != 1 or mu.size == 0:
            raise DimensionMismatch("location must be a non-empty vector")
        if not np.all(np.isfinite(mu)):
            raise DomainError("location entries must be finite")
        sigma = symmetrize(self.sigma)
        if sigma.shape[0] != mu.shape[0]:
            raise DimensionMismatch(
                f"scatter of order {sigma.shape[0]} does not match location "
                f"of length {mu.shape[0]}"
            )
        if not np.all(np.isfinite(sigma)):
            raise DomainError("scatter entries must be finite")
        nu = float(self.nu)
        if not (math.isfinite(nu) and nu > 0.0):
            raise DomainError(f"degrees of freedom must be positive, got {nu}")
        chol = cholesky_lower(sigma)
        for arr in (mu, sigma, chol):
            arr.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "chol_lower", chol)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def log_det_sigma(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.chol_lower))))


def as_data_matrix(data) -> np.ndarray:
    """Validate and return an n x p float matrix of observations."""
    rows = np.asarray(data, dtype=float)
    if rows.ndim != 2:
        raise DimensionMismatch(f"data must be a 2-d matrix, got ndim={rows.ndim}")
    if rows.shape[0] < 1 or rows.shape[1] < 1:
        raise DimensionMismatch(f"data matrix must be non-empty, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise DomainError("data entries must be finite")
    return rows


def _log_norm_const(nu: float, p: int, log_det_sigma: float) -> float:
    return (
        log_gamma(0.5 * (nu + p))
        - log_gamma(0.5 * nu)
        - 0.5 * p * math.log(math.pi * nu)
        - 0.5 * log_det_sigma
    )


def log_pdf_rows(rows, params: MvtParams) -> np.ndarray:
    """Log density of each row under the t distribution."""
    s = mahalanobis_sq_from_chol(rows, params.mu, params.chol_lower)
    nu, p = params.nu, params.dim
    const = _log_norm_const(nu, p, params.log_det_sigma)
    return const - 0.5 * (nu + p) * np.log1p(s / nu)


def log_pdf(x, params: MvtParams) -> float:
    """Log density of a single observation."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(log_pdf_rows(x[None, :], params)[0])


def lq_transform(u, q: float):
    """The q-deformed logarithm: log(u) at q = 1, else (u^(1-q) - 1)/(1 - q).

    Accepts scalars or arrays. u must be nonnegative; u = 0 with q = 1
    yields -inf.
    """
    q = float(q)
    if not q > 0.0:
        raise DomainError("q must be positive")
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise DomainError("lq_transform requires nonnegative u")
    with np.errstate(divide="ignore"):
        if abs(q - 1.0) < _Q_ONE_TOL:
            out = np.log(arr)
        else:
            out = np.expm1((1.0 - q) * np.log(arr)) / (1.0 - q)
    return float(out) if np.isscalar(u) else out


def lq_from_log(log_u, q: float):
    """lq_transform evaluated from log(u), avoiding the intermediate power."""
    q = float(q)
    if not q > 0.0:
        raise DomainError("q must be positive")
    log_u = np.asarray(log_u, dtype=float)
    if abs(q - 1.0) < _Q_ONE_TOL:
        return log_u
    return np.expm1((1.0 - q) * log_u) / (1.0 - q)


def sample(params: MvtParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows via the normal/chi-squared scale mixture.

    Each row is mu + L z / sqrt(u / nu) with z standard normal and u
    chi-squared(nu), the latter generated as 2 * Gamma(nu / 2). A given
    generator state yields an identical dataset.
    """
    n = int(n)
    if n < 1:
        raise DomainError("sample size must be at least 1")
    p = params.dim
    z = rng.standard_normal((n, p))
    u = 2.0 * rng.standard_gamma(0.5 * params.nu, size=n)
    scale = np.sqrt(u / params.nu)
    return params.mu + (z @ params.chol_lower.T) / scale[:, None]


def _check_s_nu(s, nu: float):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise DomainError("squared Mahalanobis distance must be nonnegative")
    if not nu > 0.0:
        raise DomainError("degrees of freedom must be positive")
    return arr


def cond_expect_u(s, nu: float, p: int):
    """E(U | x): the multiplicative downweight (nu + p) / (nu + s)."""
    arr = _check_s_nu(s, nu)
    out = (nu + p) / (nu + arr)
    return float(out) if np.isscalar(s) else out


def cond_expect_log_u(s, nu: float, p: int):
    """E(log U | x) = digamma((nu + p)/2) - log((nu + s)/2)."""
    arr = _check_s_nu(s, nu)
    out = digamma(0.5 * (nu + p)) - np.log(0.5 * (nu + arr))
    return float(out) if np.isscalar(s) else out


def ml_score_nu(s, nu: float, p: int):
    """Per-observation likelihood score in nu at squared distance s.

    Diverges to -inf like -log(s)/2, which is the unbounded-influence
    problem the reweighted estimator addresses.
    """
    arr = _check_s_nu(s, nu)
    out = 0.5 * (
        math.log(nu)
        + 1.0
        + digamma(0.5 * (nu + p))
        - digamma(0.5 * nu)
        - np.log(nu + arr)
        - (nu + p) / (nu + arr)
    )
    return float(out) if np.isscalar(s) else out


def mlq_score_nu(x, params: MvtParams, q: float) -> float:
    """Per-observation nu-score summand of the q-weighted likelihood.

    The plain score bracket is multiplied by f(x)^(1-q); the factor decays
    polynomially in the Mahalanobis distance so the product stays bounded
    and tends to zero far from the center.
    """
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie strictly between 0 and 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = float(mahalanobis_sq_from_chol(x[None, :], params.mu, params.chol_lower)[0])
    nu, p = params.nu, params.dim
    bracket = (
        -digamma(0.5 * nu)
        + digamma(0.5 * (nu + p))
        + math.log(nu)
        - math.log(nu + s)
        - (nu + p) / (nu + s)
        + 1.0
    )
    return bracket * math.exp((1.0 - q) * log_pdf(x, params))


def score_curve(params: MvtParams, s_grid, q: float | None = None) -> np.ndarray:
    """Evaluate the nu-score along a grid of squared Mahalanobis distances.

    Returns an array of (s, value) pairs. Without q the plain likelihood
    score is used; with q the weighted summand is evaluated at the point
    sitting at that distance along the first principal axis of the scatter.
    """
    grid = np.asarray(s_grid, dtype=float)
    if grid.size == 0:
        return np.empty((0, 2))
    if grid.ndim != 1:
        raise DimensionMismatch("s grid must be one-dimensional")
    if np.any(grid < 0.0) or np.any(np.isnan(grid)):
        raise DomainError("s grid must be nonnegative")
    if np.any(np.diff(grid) < 0.0):
        raise DomainError("s grid must be ascending")
    if q is None:
        values = ml_score_nu(grid, params.nu, params.dim)
    else:
        axis = params.chol_lower[:, 0]
        values = np.array(
            [mlq_score_nu(params.mu + math.sqrt(s) * axis, params, q) for s in grid]
        )
    return np.column_stack([grid, values])
