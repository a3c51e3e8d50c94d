"""Fitting the multivariate t distribution by plain and q-weighted likelihood.

Both fits share one outer loop. Each iteration refreshes the conditional
expectations of the latent chi-squared mixing variable at the current
parameters, updates location and scatter by closed-form weighted sums, and
(optionally) updates the degrees of freedom by a bracketed scalar root
solve. The plain branch is the classical EM algorithm for the t
distribution, whose observed-data log-likelihood never decreases. The
q-weighted branch multiplies every observation's contribution by its
density raised to (1 - q) on top of the EM weight, so outlying points are
downweighted twice; it has no ascent guarantee, and convergence is judged
on the parameter-change norm alone, exactly as for the plain branch.

Conventions pinned here and recorded in FitResult so runs are reproducible:

* the stopping norm is the unweighted Euclidean norm over the concatenation
  of mu, the upper triangle of sigma, and nu (nu omitted when held fixed);
* the plain-likelihood scatter update re-centers on the freshly updated
  location, while the q-weighted scatter update centers on the previous
  iterate's location (the form its estimating equation is written in); an
  option flips the latter to the updated location;
* the nu solve clamps to the nearer bracket endpoint when the score does
  not change sign on the bracket, which happens for near-normal data, and
  the result is flagged rather than treated as an error.

All reductions over observations are performed in a value-sorted order, so
permuting the rows of the dataset cannot change the fitted result even at
the level of floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateData, DomainError
from .linalg import cholesky_lower, mahalanobis_sq_from_chol, spd_repair, symmetrize
from .special import digamma, log_gamma
from .tdist import (
    MvtParams,
    as_data_matrix,
    cond_expect_log_u,
    cond_expect_u,
    log_pdf_rows,
    lq_from_log,
)

__all__ = [
    "METHOD_ML",
    "METHOD_MLQ",
    "NORM_DEFINITION",
    "FitConfig",
    "FitResult",
    "EStepQuantities",
    "IterationRecord",
    "NuSolveResult",
    "init_params",
    "e_step",
    "m_step_ml",
    "solve_nu_ml",
    "mlq_weights",
    "m_step_mlq",
    "solve_nu_mlq",
    "fit",
]

METHOD_ML = "ml"
METHOD_MLQ = "mlq"

NORM_DEFINITION = "euclidean(mu, upper_triangle(sigma), nuif estimated)"


def _stable_sum(a, axis: int = 0):
    """Sum with a value-sorted reduction order.

    Sorting first fixes the summation order regardless of how the input
    rows were arranged, which is what makes fits bitwise invariant under
    dataset row permutations.
    """
    return np.sort(np.asarray(a, dtype=float), axis=axis).sum(axis=axis)


@dataclass(frozen=True)
class FitConfig:
    """Estimator controls.

    q is only meaningful for the q-weighted method; fixed_nu is only used
    when estimate_nu is False.
    """

    method: str = METHOD_ML
    q: float = 1.0
    estimate_nu: bool = True
    fixed_nu: float = 3.0
    epsilon: float = 1e-6
    max_iter: int = 1000
    nu_bracket: tuple[float, float] = (0.1, 200.0)
    spd_floor: float = 1e-10
    # scatter update of the q-weighted step centers on the previous
    # location as written; set True to use the updated one instead
    mlq_scatter_uses_updated_mu: bool = False

    def __post_init__(self):
        if self.method not in (METHOD_ML, METHOD_MLQ):
            raise DomainError(f"unknown method {self.method!r}")
        if not 0.0 < self.q <= 1.0:
            raise DomainError("q must lie in (0, 1]")
        if not self.epsilon > 0.0:
            raise DomainError("epsilon must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        lo, hi = self.nu_bracket
        if not (0.0 < lo < hi):
            raise DomainError("nu bracket must satisfy 0 < low < high")
        if not self.fixed_nu > 0.0:
            raise DomainError("fixed_nu must be positive")
        if not self.spd_floor > 0.0:
            raise DomainError("spd_floor must be positive")


class EStepQuantities(NamedTuple):
    """Per-observation conditional expectations and squared distances."""

    u1: np.ndarray
    u2: Optional[np.ndarray]
    s: np.ndarray


class IterationRecord(NamedTuple):
    iteration: int
    change_norm: float
    objective: float


class NuSolveResult(NamedTuple):
    nu: float
    bracketed: bool


@dataclass(frozen=True)
class FitResult:
    """Converged parameters plus the iteration trace and diagnostics."""

    params: MvtParams
    iterations: int
    converged: bool
    trace: tuple[IterationRecord, ...]
    objective: float
    method: str
    q: Optional[float]
    nu_estimated: bool
    nu_clamped: bool
    change_norm: float
    norm_definition: str = field(default=NORM_DEFINITION)


def init_params(data, spd_floor: float = 1e-10) -> MvtParams:
    """Starting point: column means, repaired sample covariance, nu = 3."""
    rows = as_data_matrix(data)
    n, _ = rows.shape
    if n < 2:
        raise DegenerateData("initialization needs at least two observations")
    mu = _stable_sum(rows, axis=0) / n
    centered = rows - mu
    outer = centered[:, :, None] * centered[:, None, :]
    cov = _stable_sum(outer, axis=0) / (n - 1)
    if float(np.max(np.abs(cov))) == 0.0:
        raise DegenerateData("all observations are identical")
    return MvtParams(mu, spd_repair(cov, spd_floor), 3.0)


def e_step(data, params: MvtParams, need_log: bool = True) -> EStepQuantities:
    """Conditional expectations of the mixing variable at the current iterate.

    u2 (the expected log) only feeds the degrees-of-freedom equations, so
    it is skipped when need_log is False.
    """
    rows = as_data_matrix(data)
    s = mahalanobis_sq_from_chol(rows, params.mu, params.chol_lower)
    u1 = cond_expect_u(s, params.nu, params.dim)
    u2 = cond_expect_log_u(s, params.nu, params.dim) if need_log else None
    return EStepQuantities(u1, u2, s)


def _weighted_location_scatter(rows, w_mu, center, w_sigma, denom, spd_floor):
    mu = _stable_sum(w_mu[:, None] * rows, axis=0) / _stable_sum(w_mu)
    d = rows - (mu if center is None else center)
    sigma = _stable_sum(w_sigma[:, None, None] * d[:, :, None] * d[:, None, :], axis=0)
    sigma = sigma / denom
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
        raise DegenerateData("weighted update produced non-finite parameters")
    return mu, spd_repair(sigma, spd_floor)


def m_step_ml(data, est: EStepQuantities, prev: MvtParams,
              spd_floor: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Weighted-mean and weighted-covariance update of the plain EM step.

    The scatter is centered on the freshly updated location, which keeps
    the step a genuine conditional maximization.
    """
    rows = as_data_matrix(data)
    if not float(_stable_sum(est.u1)) > 0.0:
        raise DegenerateData("EM weights sum to zero")
    return _weighted_location_scatter(
        rows, est.u1, None, est.u1, rows.shape[0], spd_floor
    )


def _bracketed_root(g, lo: float, hi: float) -> NuSolveResult:
    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo == 0.0:
        return NuSolveResult(lo, True)
    if g_hi == 0.0:
        return NuSolveResult(hi, True)
    if (g_lo < 0.0) != (g_hi < 0.0):
        root = brentq(g, lo, hi, xtol=1e-10, maxiter=200)
        return NuSolveResult(float(root), True)
    return NuSolveResult(lo if abs(g_lo) <= abs(g_hi) else hi, False)


def solve_nu_ml(est: EStepQuantities, bracket: tuple[float, float]) -> NuSolveResult:
    """Root of the plain-likelihood degrees-of-freedom equation.

    The score per observation is log(nu/2) - digamma(nu/2) + 1 + u2 - u1;
    its sum is strictly decreasing in nu. Without a sign change on the
    bracket the nearer endpoint is returned with bracketed=False (the
    near-normal case when the data want nu -> infinity).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < lo < hi):
        raise DomainError("nu bracket must satisfy 0 < low < high")
    if est.u2 is None:
        raise DomainError("expected-log quantities are required for the nu solve")
    n = est.u1.shape[0]
    offset = float(_stable_sum(est.u2 - est.u1))

    def g(nu: float) -> float:
        return n * (np.log(0.5 * nu) - digamma(0.5 * nu) + 1.0) + offset

    return _bracketed_root(g, lo, hi)


def mlq_weights(s, nu: float, p: int, q: float):
    """The two q-weighted step weights at squared distance s.

    With a = (1 - q)(nu + p)/2 these are w = (nu + p) * (nu + s)^-(1 + a)
    for the location/scatter numerators and v = (nu + s)^-a for the
    scatter denominator; both are computed through exp/log. At q = 1 they
    reduce exactly to the plain EM weight and 1.
    """
    if not 0.0 < q <= 1.0:
        raise DomainError("q must lie in (0, 1]")
    if not nu > 0.0:
        raise DomainError("degrees of freedom must be positive")
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise DomainError("squared distances must be nonnegative")
    a = 0.5 * (1.0 - q) * (nu + p)
    if a == 0.0:
        w = (nu + p) / (nu + arr)
        v = np.ones_like(arr)
    else:
        log_ns = np.log(nu + arr)
        w = (nu + p) * np.exp(-(1.0 + a) * log_ns)
        v = np.exp(-a * log_ns)
    if np.isscalar(s):
        return float(w), float(v)
    return w, v


def m_step_mlq(data, prev: MvtParams, q: float, spd_floor: float = 1e-10,
               s: Optional[np.ndarray] = None,
               use_updated_mu: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Doubly weighted location/scatter update.

    Distances come from the previous iterate. The scatter numerator is
    centered on the previous location (pass use_updated_mu=True for the
    freshly updated one) and its denominator is the sum of the v weights
    rather than n.
    """
    rows = as_data_matrix(data)
    if s is None:
        s = mahalanobis_sq_from_chol(rows, prev.mu, prev.chol_lower)
    w, v = mlq_weights(s, prev.nu, prev.dim, q)
    sum_w = float(_stable_sum(w))
    sum_v = float(_stable_sum(v))
    if not (sum_w > 0.0 and sum_v > 0.0):
        raise DegenerateData("q-weighted weights sum to zero")
    center = None if use_updated_mu else prev.mu
    return _weighted_location_scatter(rows, w, center, w, sum_v, spd_floor)


def solve_nu_mlq(data, current: tuple[np.ndarray, np.ndarray],
                 est: EStepQuantities, q: float,
                 bracket: tuple[float, float]) -> NuSolveResult:
    """Root of the q-weighted degrees-of-freedom equation.

    Every observation's score term is multiplied by its density at the
    current location/scatter raised to (1 - q); the density, hence the
    weight, is re-evaluated at each candidate nu. Bracketing and clamping
    follow the plain solve.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < lo < hi):
        raise DomainError("nu bracket must satisfy 0 < low < high")
    if not 0.0 < q <= 1.0:
        raise DomainError("q must lie in (0, 1]")
    if est.u2 is None:
        raise DomainError("expected-log quantities are required for the nu solve")
    mu_c = np.atleast_1d(np.asarray(current[0], dtype=float))
    chol = cholesky_lower(symmetrize(current[1]))
    rows = as_data_matrix(data)
    s = est.s
    if s is None or s.shape[0] != rows.shape[0]:
        s = mahalanobis_sq_from_chol(rows, mu_c, chol)
    p = mu_c.shape[0]
    log_det = float(2.0 * np.sum(np.log(np.diag(chol))))
    base = est.u2 - est.u1 + 1.0
    half_p_log_pi = 0.5 * p * np.log(np.pi)
    one_minus_q = 1.0 - q

    def g(nu: float) -> float:
        log_f = (
            log_gamma(0.5 * (nu + p))
            - log_gamma(0.5 * nu)
            - half_p_log_pi
            - 0.5 * p * np.log(nu)
            - 0.5 * log_det
            - 0.5 * (nu + p) * np.log1p(s / nu)
        )
        weights = np.exp(one_minus_q * log_f)
        bracket_terms = base + (np.log(0.5 * nu) - digamma(0.5 * nu))
        return float(_stable_sum(bracket_terms * weights))

    return _bracketed_root(g, lo, hi)


def _pack(params: MvtParams, with_nu: bool) -> np.ndarray:
    iu = np.triu_indices(params.dim)
    parts = [params.mu, params.sigma[iu]]
    if with_nu:
        parts.append(np.array([params.nu]))
    return np.concatenate(parts)


def _objective(rows, params: MvtParams, method: str, q: float) -> float:
    log_f = log_pdf_rows(rows, params)
    if method == METHOD_MLQ:
        return float(_stable_sum(lq_from_log(log_f, q)))
    return float(_stable_sum(log_f))


def fit(data, config: FitConfig) -> FitResult:
    """Run the chosen estimator to convergence.

    Iterates expectation and update steps until the parameter-change norm
    drops below epsilon or max_iter is reached. Hitting the iteration cap
    is not an error: the result comes back with converged=False and the
    full trace.
    """
    rows = as_data_matrix(data)
    start = init_params(rows, config.spd_floor)
    nu0 = 3.0 if config.estimate_nu else config.fixed_nu
    params = MvtParams(start.mu, start.sigma, nu0)

    weighted = config.method == METHOD_MLQ
    trace: list[IterationRecord] = []
    converged = False
    clamped = False
    prev_vec = _pack(params, config.estimate_nu)

    for iteration in range(1, config.max_iter + 1):
        est = e_step(rows, params, need_log=config.estimate_nu)
        if weighted:
            mu, sigma = m_step_mlq(
                rows, params, config.q, config.spd_floor, s=est.s,
                use_updated_mu=config.mlq_scatter_uses_updated_mu,
            )
        else:
            mu, sigma = m_step_ml(rows, est, params, config.spd_floor)
        if config.estimate_nu:
            if weighted:
                solved = solve_nu_mlq(
                    rows, (params.mu, params.sigma), est, config.q, config.nu_bracket
                )
            else:
                solved = solve_nu_ml(est, config.nu_bracket)
            nu = solved.nu
            clamped = clamped or not solved.bracketed
        else:
            nu = params.nu
        params = MvtParams(mu, sigma, nu)
        vec = _pack(params, config.estimate_nu)
        change = float(np.linalg.norm(vec - prev_vec))
        prev_vec = vec
        objective = _objective(rows, params, config.method, config.q)
        trace.append(IterationRecord(iteration, change, objective))
        if change < config.epsilon:
            converged = True
            break

    return FitResult(
        params=params,
        iterations=len(trace),
        converged=converged,
        trace=tuple(trace),
        objective=trace[-1].objective,
        method=config.method,
        q=config.q if weighted else None,
        nu_estimated=config.estimate_nu,
        nu_clamped=clamped,
        change_norm=trace[-1].change_norm,
    )
