"""Small dense SPD linear algebra used by the density and the estimators.

Everything is routed through Cholesky factors: log-determinants come from
the factor diagonal and quadratic forms from one triangular solve. No
explicit matrix inverse is formed anywhere, which keeps the per-observation
weights stable when Mahalanobis distances get very large.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, DomainError, NotPositiveDefinite

__all__ = [
    "symmetrize",
    "cholesky_lower",
    "log_det",
    "mahalanobis_sq",
    "mahalanobis_sq_rows",
    "mahalanobis_sq_from_chol",
    "spd_repair",
]


def symmetrize(m) -> np.ndarray:
    """Return the symmetric part (m + m.T) / 2 as a float array."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def cholesky_lower(m) -> np.ndarray:
    """Lower Cholesky factor L with m = L @ L.T.

    Raises NotPositiveDefinite when a pivot fails; that is how degenerate
    scatter matrices are detected throughout the package.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc


def log_det(m) -> float:
    """log determinant of an SPD matrix, as 2 * sum(log diag(L))."""
    chol = cholesky_lower(m)
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def mahalanobis_sq_from_chol(rows, mu, chol: np.ndarray) -> np.ndarray:
    """Squared Mahalanobis distances of each row given a lower Cholesky factor."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    mu = np.asarray(mu, dtype=float)
    if rows.shape[1] != mu.shape[0] or chol.shape[0] != mu.shape[0]:
        raise DimensionMismatch(
            f"rows of width {rows.shape[1]} incompatible with location of "
            f"length {mu.shape[0]} and factor of order {chol.shape[0]}"
        )
    z = solve_triangular(chol, (rows - mu).T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z)


def mahalanobis_sq_rows(rows, mu, sigma) -> np.ndarray:
    """Squared Mahalanobis distances (x - mu)' sigma^-1 (x - mu) per row."""
    return mahalanobis_sq_from_chol(rows, mu, cholesky_lower(sigma))


def mahalanobis_sq(x, mu, sigma) -> float:
    """Squared Mahalanobis distance of a single vector."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionMismatch("x must be a vector")
    return float(mahalanobis_sq_rows(x[None, :], mu, sigma)[0])


def _lambda_min_2x2(m: np.ndarray) -> float:
    a, b, c = m[0, 0], m[0, 1], m[1, 1]
    return float(0.5 * (a + c) - np.hypot(0.5 * (a - c), b))


def _chol_succeeds(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def _lambda_min_bisect(m: np.ndarray) -> float:
    """Smallest eigenvalue located by bisection on Cholesky success of m - t*I.

    Cholesky of m - t*I succeeds exactly when t < lambda_min, so the
    success/failure boundary is the eigenvalue. The returned value is the
    last certified lower endpoint, hence never above the true lambda_min.
    """
    p = m.shape[0]
    eye = np.eye(p)
    diag = np.diag(m)
    radii = np.sum(np.abs(m), axis=1) - np.abs(diag)
    scale = max(1.0, float(np.max(np.abs(m))))
    lo = float(np.min(diag - radii)) - 1e-3 * scale  # Gershgorin, padded
    while not _chol_succeeds(m - lo * eye):
        lo -= scale
        scale *= 2.0
    hi = float(np.min(diag)) + 1e-3 * scale
    while _chol_succeeds(m - hi * eye):
        hi += scale
        scale *= 2.0
    for _ in range(200):
        if hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if _chol_succeeds(m - mid * eye):
            lo = mid
        else:
            hi = mid
    return lo


def spd_repair(m, floor: float = 1e-10) -> np.ndarray:
    """Symmetrize m and shift its diagonal so the smallest eigenvalue >= floor.

    The smallest eigenvalue is computed analytically for order 1 and 2 and
    by Cholesky-failure bisection otherwise, so no general eigensolver is
    involved. An input that is already comfortably positive definite comes
    back unchanged apart from symmetrization.
    """
    if not floor > 0:
        raise DomainError("floor must be positive")
    sym = symmetrize(m)
    if not np.all(np.isfinite(sym)):
        raise DomainError("matrix entries must be finite")
    p = sym.shape[0]
    if p == 1:
        lam = float(sym[0, 0])
    elif p == 2:
        lam = _lambda_min_2x2(sym)
    else:
        if _chol_succeeds(sym - floor * np.eye(p)):
            return sym
        lam = _lambda_min_bisect(sym)
    shift = max(0.0, floor - lam)
    if shift > 0.0:
        sym = sym + shift * np.eye(p)
    return sym
