"""Shared dense numerical kernels.

Symmetric eigendecomposition with a fixed sign convention, nearest-SPD repair
by eigenvalue clipping, Woodbury inversion for low-rank-plus-sparse matrices,
natural cubic splines, soft thresholding, and orthogonal loading alignment.
All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from .errors import (
    ExtrapolationError,
    NumericError,
    ParameterError,
    SingularityError,
)


@dataclass(frozen=True)
class EigenPairs:
    """Top-k eigenpairs of a symmetric matrix.

    values are sorted descending; vectors has orthonormal columns with each
    column's largest-magnitude entry made nonnegative so results are
    reproducible across runs and platforms.
    """

    values: np.ndarray
    vectors: np.ndarray


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen_topk(m: np.ndarray, k: int) -> EigenPairs:
    """Top-k eigenpairs of a (near-)symmetric matrix.

    The input is symmetrized as (M + M')/2 first; relative asymmetry beyond
    1e-8 is rejected as a numeric error, as are non-finite entries.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"need a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NumericError("matrix contains non-finite entries")
    n = m.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must lie in 1..{n}, got {k}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > 1e-8 * scale:
        raise NumericError("matrix is not symmetric to 1e-8 relative")
    sym = (m + m.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    order = np.argsort(values)[::-1][:k]
    return EigenPairs(values[order].copy(), _fix_signs(vectors[:, order]))


def nearest_spd(m: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Nearest symmetric positive-definite repair by eigenvalue clipping.

    Symmetrizes, clips every eigenvalue below `floor` up to `floor`
    (default 1e-8 * max(1, lambda_max)), and reassembles. The output always
    passes a Cholesky factorization; SPD inputs with lambda_min > floor are
    returned unchanged up to roundoff, so the repair is idempotent.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"need a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NumericError("matrix contains non-finite entries")
    sym = (m + m.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    if floor is None:
        floor = 1e-8 * max(1.0, float(values[-1]))
    for _ in range(8):
        clipped = np.maximum(values, floor)
        out = (vectors * clipped) @ vectors.T
        out = (out + out.T) / 2.0
        try:
            np.linalg.cholesky(out)
            return out
        except np.linalg.LinAlgError:
            floor *= 10.0  # unreachable in practice; keeps the function total
    raise NumericError("nearest_spd failed to produce a Cholesky-factorable matrix")


def spd_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via Cholesky."""
    m = np.asarray(m, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        lam = float(np.linalg.eigvalsh((m + m.T) / 2.0)[0])
        raise SingularityError("matrix is not positive definite", lam) from exc
    inv = scipy.linalg.cho_solve(factor, np.eye(m.shape[0]), check_finite=False)
    return (inv + inv.T) / 2.0


def woodbury_inverse(loadings: np.ndarray, factor_cov: np.ndarray,
                     resid_inv: np.ndarray) -> np.ndarray:
    """Exact inverse of L*Sf*L' + Su given L, Sf, and Su^-1.

    Parameters
    ----------
    loadings : (N, R) array
    factor_cov : (R, R) SPD array
    resid_inv : (N, N) SPD array, the inverse of the residual covariance

    Returns
    -------
    (N, N) array
        Su^-1 - Su^-1 L (Sf^-1 + L' Su^-1 L)^-1 L' Su^-1, i.e. the exact
        inverse of the low-rank-plus-sparse sum, at O(N^2 R) cost.

    Raises
    ------
    SingularityError
        If Sf or the R x R core fails Cholesky; carries lambda_min.
    """
    loadings = np.asarray(loadings, dtype=float)
    factor_cov = np.asarray(factor_cov, dtype=float)
    resid_inv = np.asarray(resid_inv, dtype=float)
    n, r = loadings.shape
    if r == 0:
        return resid_inv.copy()
    try:
        sf_factor = scipy.linalg.cho_factor(factor_cov, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        lam = float(np.linalg.eigvalsh((factor_cov + factor_cov.T) / 2.0)[0])
        raise SingularityError("factor covariance is not positive definite", lam) from exc
    sf_inv = scipy.linalg.cho_solve(sf_factor, np.eye(r), check_finite=False)
    su_l = resid_inv @ loadings
    core = sf_inv + loadings.T @ su_l
    core = (core + core.T) / 2.0
    try:
        core_factor = scipy.linalg.cho_factor(core, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        lam = float(np.linalg.eigvalsh(core)[0])
        raise SingularityError("Woodbury core is not positive definite", lam) from exc
    solved = scipy.linalg.cho_solve(core_factor, su_l.T, check_finite=False)
    out = resid_inv - su_l @ solved
    return (out + out.T) / 2.0


def soft_threshold(z, tau):
    """sgn(z) * max(|z| - tau, 0), elementwise; tau must be nonnegative."""
    tau_arr = np.asarray(tau, dtype=float)
    if (tau_arr < 0).any():
        raise ParameterError("threshold tau must be nonnegative")
    z_arr = np.asarray(z, dtype=float)
    out = np.sign(z_arr) * np.maximum(np.abs(z_arr) - tau_arr, 0.0)
    if np.isscalar(z) or z_arr.ndim == 0:
        return float(out)
    return out


def cubic_spline_interpolate(knots_x, knots_y, query_x, axis: int = 0):
    """Natural cubic spline through the knots, evaluated at query points.

    Natural boundary conditions (second derivative zero at both ends); exact
    at the knots. Queries outside [knots_x[0], knots_x[-1]] raise
    ExtrapolationError. knots_y may be multidimensional; interpolation runs
    along `axis`.
    """
    x = np.asarray(knots_x, dtype=float)
    y = np.asarray(knots_y, dtype=float)
    q = np.asarray(query_x, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ParameterError("need at least 3 knots")
    if (np.diff(x) <= 0).any():
        raise ParameterError("knots_x must be strictly increasing")
    if q.size and (q.min() < x[0] or q.max() > x[-1]):
        raise ExtrapolationError(
            f"query outside knot range [{x[0]}, {x[-1]}]"
        )
    spline = CubicSpline(x, y, axis=axis, bc_type="natural")
    return spline(q)


def procrustes_align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal alignment of `a` onto the reference `b`.

    Returns (a @ q, q) where q minimizes ||a q - b||_F over orthogonal
    matrices, via the SVD of a'b. Resolves the rotational indeterminacy of
    estimated loading matrices before error norms are taken.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    r = a.shape[1]
    if np.linalg.matrix_rank(a) < r or np.linalg.matrix_rank(b) < r:
        raise NumericError("alignment failed: input matrix is rank-deficient")
    u, _, vt = np.linalg.svd(a.T @ b)
    q = u @ vt
    return a @ q, q
