"""Characteristic sieve bases and projected local principal components.

Loadings assumed to be smooth additive functions of a few observed
characteristics are estimated by projecting the kernel-weighted panel onto
the span of per-characteristic polynomial expansions before extracting
principal components. Characteristics are standardized cross-sectionally
before expansion; raw powers of unstandardized covariates would wreck the
Gram conditioning without changing the spanned function space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DegenerateBasisError, ParameterError
from .kernels import KernelWeights, boundary_weights
from .linalg import sym_eigen_topk
from .localpca import LOCAL_PPCA, LocalFactorEstimate, _panel_values, weight_panel


@dataclass(frozen=True)
class SieveBasis:
    """Polynomial sieve design matrix built from one period's characteristics.

    Columns are a shared intercept (optional) followed by powers 1..J of each
    standardized characteristic, grouped characteristic by characteristic.
    """

    matrix: np.ndarray            # N x (intercept + J*d)
    sieve_dim: int                # J
    means: np.ndarray             # d cross-sectional means used to standardize
    stds: np.ndarray              # d cross-sectional standard deviations
    include_intercept: bool = True

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]


def build_basis(characteristics: np.ndarray, sieve_dim: int,
                names: Sequence[str] | None = None,
                include_intercept: bool = True) -> SieveBasis:
    """Build the sieve design matrix from an N x d characteristic slice.

    Each characteristic is standardized to cross-sectional mean 0 and
    variance 1; a constant characteristic makes that impossible and raises
    DegenerateBasisError naming the offender.
    """
    x = np.asarray(characteristics, dtype=float)
    if x.ndim != 2:
        raise ParameterError("characteristics slice must be an N x d array")
    if sieve_dim < 1:
        raise ParameterError(f"sieve_dim must be >= 1, got {sieve_dim}")
    n, d = x.shape
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    for col in range(d):
        if stds[col] <= 1e-12 * max(1.0, abs(means[col])):
            label = names[col] if names is not None else f"#{col}"
            raise DegenerateBasisError(
                f"characteristic {label} is constant across entities"
            )
    z = (x - means) / stds
    columns = []
    if include_intercept:
        columns.append(np.ones(n))
    for col in range(d):
        power = np.ones(n)
        for _ in range(sieve_dim):
            power = power * z[:, col]
            columns.append(power.copy())
    matrix = np.column_stack(columns)
    return SieveBasis(matrix, int(sieve_dim), means, stds, include_intercept)


def default_ridge(basis: SieveBasis) -> float:
    gram = basis.matrix.T @ basis.matrix
    return 1e-8 * float(np.trace(gram)) / gram.shape[0]


def project(basis: SieveBasis, m: np.ndarray, ridge: float | None = None) -> np.ndarray:
    """Project the columns of m onto the span of the sieve basis.

    Computes Phi (Phi'Phi + ridge I)^-1 Phi' m through a Cholesky solve of
    the small Gram system; the N x N projection matrix is never formed.
    ridge defaults to 1e-8 * trace(Phi'Phi) / columns; pass 0 for the exact
    projection.
    """
    m = np.asarray(m, dtype=float)
    phi = basis.matrix
    if m.shape[0] != phi.shape[0]:
        raise ParameterError(
            f"matrix has {m.shape[0]} rows but basis has {phi.shape[0]}"
        )
    if ridge is None:
        ridge = default_ridge(basis)
    if ridge < 0:
        raise ParameterError("ridge must be nonnegative")
    gram = phi.T @ phi + ridge * np.eye(phi.shape[1])
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        lam = float(np.linalg.eigvalsh((gram + gram.T) / 2.0)[0])
        raise ConditioningError(
            "sieve Gram matrix is numerically singular", lam
        ) from exc
    coef = scipy.linalg.cho_solve(factor, phi.T @ m, check_finite=False)
    return phi @ coef


def estimate_local_ppca(panel, characteristics, anchor: int, h: float,
                        n_factors: int, sieve_dim: int,
                        weights: KernelWeights | None = None,
                        ridge: float | None = None,
                        basis_period: int | None = None) -> LocalFactorEstimate:
    """Characteristic-projected local principal components at one anchor.

    The basis is built from characteristics at the period before the anchor
    (clamped to the first period when anchor = 1) unless `basis_period`
    overrides it. Factors over sqrt(T) are the top eigenvectors of the
    T x T matrix Y' P Y (symmetrized), and loadings P Y F / T lie in the
    basis span by construction.

    Requires n_factors <= basis columns <= N.
    """
    values = _panel_values(panel)
    n, t = values.shape
    chars_values = getattr(characteristics, "values", None)
    names = getattr(characteristics, "characteristic_names", None)
    if chars_values is None:
        chars_values = np.asarray(characteristics, dtype=float)
    if chars_values.ndim != 3:
        raise ParameterError("characteristics must be an N x d x T array")
    if chars_values.shape[0] != n or chars_values.shape[2] != t:
        raise ParameterError("characteristics do not match the panel dimensions")

    if basis_period is None:
        basis_period = max(int(anchor) - 1, 1)
    if not 1 <= basis_period <= t:
        raise ParameterError(f"basis period {basis_period} outside 1..{t}")
    basis = build_basis(chars_values[:, :, basis_period - 1], sieve_dim, names=names)
    if not n_factors <= basis.n_columns <= n:
        raise ParameterError(
            f"need n_factors <= basis columns <= N, got "
            f"{n_factors} / {basis.n_columns} / {n}"
        )

    explicit_weights = weights is not None
    if weights is None:
        weights = boundary_weights(t, anchor, h)
    elif weights.n_periods != t:
        raise ParameterError("weights length does not match panel periods")
    if explicit_weights:
        cap = min(n, int(weights.support.size))
    else:
        cap = min(n, math.floor(t * h + 1e-9))
    if not 1 <= n_factors <= cap:
        raise ParameterError(
            f"n_factors={n_factors} exceeds the effective local sample (cap {cap})"
        )

    support = weights.support
    weighted = values[:, support] * np.sqrt(weights.weights[support])[None, :]
    projected = project(basis, weighted, ridge=ridge)
    product = weighted.T @ projected
    product = (product + product.T) / 2.0
    pairs = sym_eigen_topk(product, n_factors)

    factors = np.zeros((t, n_factors))
    factors[support] = math.sqrt(t) * pairs.vectors
    loadings = projected @ factors[support] / t
    factor_cov = factors[support].T @ factors[support] / t
    residuals = np.zeros((n, t))
    residuals[:, support] = weighted - loadings @ factors[support].T
    return LocalFactorEstimate(
        anchor=int(anchor),
        factors=factors,
        loadings=loadings,
        eigenvalues=pairs.values / (n * t),
        factor_cov=factor_cov,
        residuals=residuals,
        method=LOCAL_PPCA,
        bandwidth=float(weights.bandwidth),
        weights=weights,
    )


def weighted_ls_objective(panel, basis: SieveBasis, coef: np.ndarray,
                          factors: np.ndarray, weights: KernelWeights) -> float:
    """Mean squared error (1/NT) ||Y_w - Phi B F'||_F^2 of a sieve fit.

    `factors` is the weighted factor matrix (the same object the projected
    estimator returns), so the estimator's solution can be compared against
    arbitrary feasible (B, F) pairs.
    """
    weighted = weight_panel(panel, weights)
    n, t = weighted.shape
    fitted = basis.matrix @ np.asarray(coef, dtype=float) @ np.asarray(factors, dtype=float).T
    diff = weighted - fitted
    return float(np.sum(diff * diff) / (n * t))


def basis_coefficients(basis: SieveBasis, loadings: np.ndarray) -> np.ndarray:
    """Least-squares sieve coefficients B with Phi B ~= loadings."""
    coef, *_ = np.linalg.lstsq(basis.matrix, np.asarray(loadings, dtype=float),
                               rcond=None)
    return coef
