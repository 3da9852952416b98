"""Kernel-weighted local principal components.

At an anchor period r the panel columns are scaled by the square root of the
boundary kernel weights; factors are sqrt(T) times the top eigenvectors of the
T x T product of the weighted panel with itself, and loadings follow by
cross-multiplication. Periods with zero kernel weight cannot influence the
estimate, so the eigenproblem is solved on the compact-support block; the
embedded result is identical to eigendecomposing the full T x T product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .kernels import KernelWeights, boundary_weights
from .linalg import sym_eigen_topk

LOCAL_PCA = "local-pca"
LOCAL_PPCA = "local-ppca"


@dataclass
class LocalFactorEstimate:
    """Factors, loadings, and weighted residuals estimated at one anchor."""

    anchor: int
    factors: np.ndarray      # T x R, satisfies F'F/T = I
    loadings: np.ndarray     # N x R
    eigenvalues: np.ndarray  # top R eigenvalues of the scaled T x T product
    factor_cov: np.ndarray   # R x R, identity under the normalization
    residuals: np.ndarray    # N x T, kernel-weighted residuals
    method: str
    bandwidth: float
    weights: KernelWeights

    @property
    def n_periods(self) -> int:
        return self.factors.shape[0]

    @property
    def n_entities(self) -> int:
        return self.loadings.shape[0]

    @property
    def n_factors(self) -> int:
        return self.factors.shape[1]


def _panel_values(panel) -> np.ndarray:
    values = getattr(panel, "values", panel)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ParameterError("panel must be a 2-D N x T array")
    return values


def weight_panel(panel, weights: KernelWeights) -> np.ndarray:
    """Scale each panel column t by sqrt(weights[t])."""
    values = _panel_values(panel)
    if values.shape[1] != weights.n_periods:
        raise ParameterError(
            f"panel has {values.shape[1]} periods but weights have {weights.n_periods}"
        )
    return values * np.sqrt(weights.weights)[None, :]


def estimate_local_pca(panel, anchor: int, h: float, n_factors: int,
                       weights: KernelWeights | None = None) -> LocalFactorEstimate:
    """Local principal components estimate at one anchor period.

    Parameters
    ----------
    panel : PanelData or (N, T) array
    anchor : int
        1-based anchor period r.
    h : float
        Bandwidth in (0, 1). Ignored when explicit `weights` are supplied
        (pass uniform weights to recover global PCA).
    n_factors : int
        Number of factors R; must not exceed min(N, floor(T*h)) (or the
        weight support size when weights are supplied).

    Returns
    -------
    LocalFactorEstimate
        factors = sqrt(T) * top-R eigenvectors of the weighted T x T product;
        loadings = weighted_panel @ factors / T; eigenvalues are the top R of
        the product scaled by 1/(N T); residuals stay in weighted form.
    """
    values = _panel_values(panel)
    n, t = values.shape
    explicit_weights = weights is not None
    if weights is None:
        weights = boundary_weights(t, anchor, h)
    elif weights.n_periods != t:
        raise ParameterError("weights length does not match panel periods")
    # kernel path caps R by floor(T*h); explicit weights by their support size
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
    product = weighted.T @ weighted
    pairs = sym_eigen_topk(product, n_factors)

    factors = np.zeros((t, n_factors))
    factors[support] = math.sqrt(t) * pairs.vectors
    loadings = weighted @ factors[support] / t
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
        method=LOCAL_PCA,
        bandwidth=float(weights.bandwidth),
        weights=weights,
    )


def factor_covariance(est: LocalFactorEstimate) -> np.ndarray:
    """(1/T) sum_t f_t f_t', recomputed from the stored factor matrix."""
    t = est.n_periods
    return est.factors.T @ est.factors / t
