"""Rolling-schedule global minimum variance backtests.

Portfolios rebalance on a fixed holding cycle after an initial training
window; each estimation uses all periods from the start through the rebalance
point (expanding training). Weights are the unconstrained minimum-variance
solution from the estimated inverse covariance, held fixed within the window
(an optional drift flag compounds them instead). Performance is the ex-post
standard deviation of all held-period portfolio returns, annualized, in
percent. The accounting layer is estimator-agnostic: swapping estimators only
swaps the covariance provider.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .engine import EstimatorConfig, estimate_at
from .errors import (
    ConditioningError,
    DefinitenessError,
    NumericError,
    ParameterError,
)
from .kernels import uniform_weights
from .linalg import spd_inverse, woodbury_inverse

ESTIMATORS = (
    "sample",
    "observed-factor",
    "static-pca",
    "static-ppca",
    "local-pca",
    "local-ppca",
)

_NEEDS_CHARS = ("static-ppca", "local-ppca")
_NEEDS_FACTORS = ("observed-factor",)


@dataclass(frozen=True)
class BacktestConfig:
    """Schedule, estimator choice, and estimator parameters."""

    estimator: str = "sample"
    initial_training: int = 102
    holding_length: int = 26
    annualization: float = 52.0
    n_factors: int = 2
    h: float = 0.1
    threshold_scale: float = 0.5
    sieve_dim: int = 4
    sieve_exponent: float = 2.0
    ridge: float | None = None
    drift: bool = False

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ParameterError(
                f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}"
            )
        if self.initial_training < 2:
            raise ParameterError("initial_training must be >= 2")
        if self.holding_length < 1:
            raise ParameterError("holding_length must be >= 1")
        if self.annualization <= 0:
            raise ParameterError("annualization must be positive")

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            n_factors=self.n_factors,
            h=self.h,
            threshold_scale=self.threshold_scale,
            sieve_dim=self.sieve_dim,
            sieve_exponent=self.sieve_exponent,
            ridge=self.ridge,
        )


@dataclass(frozen=True)
class RebalanceWindow:
    train_end: int   # last training period (1-based), the estimation anchor
    hold_start: int  # first held period
    hold_end: int    # last held period (inclusive)


@dataclass
class BacktestResult:
    estimator: str
    schedule: list[RebalanceWindow]
    weights_per_rebalance: list[np.ndarray]
    portfolio_returns: np.ndarray
    ex_post_std_annualized_pct: float


def gmv_weights(sigma_inv: np.ndarray) -> np.ndarray:
    """Unconstrained minimum-variance weights sigma_inv 1 / (1' sigma_inv 1).

    Shorts are allowed; scaling sigma_inv leaves the weights unchanged.
    """
    sigma_inv = np.asarray(sigma_inv, dtype=float)
    ones = np.ones(sigma_inv.shape[0])
    numerator = sigma_inv @ ones
    denom = float(ones @ numerator)
    if denom <= 0:
        raise DefinitenessError(
            f"1' sigma_inv 1 = {denom:.6e} is not positive"
        )
    return numerator / denom


def build_schedule(n_periods: int, config: BacktestConfig) -> list[RebalanceWindow]:
    """Rebalance points every holding_length periods after the training head.

    Holding windows partition initial_training+1 .. T; the final window is
    kept even when partial. An empty schedule (nothing to hold) warns.
    """
    schedule: list[RebalanceWindow] = []
    train_end = config.initial_training
    while train_end < n_periods:
        hold_end = min(train_end + config.holding_length, n_periods)
        schedule.append(RebalanceWindow(train_end, train_end + 1, hold_end))
        train_end += config.holding_length
    if not schedule:
        warnings.warn(
            f"no holding periods: T={n_periods} with training "
            f"{config.initial_training}", stacklevel=2,
        )
    return schedule


def _factor_regression(returns: np.ndarray, factors: np.ndarray):
    """Per-asset OLS on observed factors: (exposures, residual vars, cov)."""
    returns = np.asarray(returns, dtype=float)
    factors = np.atleast_2d(np.asarray(factors, dtype=float))
    if returns.shape[1] != factors.shape[1]:
        raise ParameterError("returns and factors must cover the same periods")
    k, t = factors.shape
    if t <= k + 1:
        raise ParameterError(f"need T > K+1 regressors, got T={t}, K={k}")
    design = np.column_stack([np.ones(t), factors.T])
    singular_values = np.linalg.svd(design, compute_uv=False)
    if singular_values[-1] <= 1e-10 * singular_values[0]:
        raise ConditioningError(
            "factor design matrix is numerically singular",
            float(singular_values[-1]),
        )
    beta, _, _, _ = np.linalg.lstsq(design, returns.T, rcond=None)
    exposures = beta[1:].T                       # N x K
    resid = returns.T - design @ beta            # T x N
    resid_var = (resid * resid).sum(axis=0) / (t - k - 1)
    factor_cov = np.atleast_2d(np.cov(factors, ddof=1))
    return exposures, resid_var, factor_cov


def observed_factor_covariance(returns: np.ndarray,
                               factors: np.ndarray) -> np.ndarray:
    """Covariance from time-series regressions on observed factor series.

    returns: N x T asset panel; factors: K x T observed series. Each asset is
    regressed on the factors (with intercept); the estimate is
    B cov(factors) B' + diag(residual variances) with OLS degrees of freedom.
    """
    exposures, resid_var, factor_cov = _factor_regression(returns, factors)
    sigma = exposures @ factor_cov @ exposures.T + np.diag(resid_var)
    return (sigma + sigma.T) / 2.0


def static_threshold_rate(n_entities: int, n_periods: int) -> float:
    """h-free moment rate for the time-invariant benchmarks."""
    return 1.0 / math.sqrt(n_entities) + math.sqrt(math.log(n_entities) / n_periods)


SigmaProvider = Callable[..., tuple[np.ndarray | None, np.ndarray]]


def _provide_sigma(train: np.ndarray, chars_train: np.ndarray | None,
                   factors_train: np.ndarray | None,
                   config: BacktestConfig) -> tuple[np.ndarray | None, np.ndarray]:
    """Built-in covariance providers keyed by config.estimator.

    Returns (sigma or None, sigma_inv); local anchors sit at the last
    training period, static variants reuse the local machinery with uniform
    weights and the h-free rate.
    """
    n, t_train = train.shape
    name = config.estimator
    est_cfg = config.estimator_config()
    if name == "sample":
        sigma = np.cov(train, ddof=1)
        return sigma, spd_inverse(sigma)
    if name == "observed-factor":
        exposures, resid_var, factor_cov = _factor_regression(train, factors_train)
        sigma = exposures @ factor_cov @ exposures.T + np.diag(resid_var)
        sigma = (sigma + sigma.T) / 2.0
        # floor residual variances so a perfectly explained asset stays invertible
        floored = np.maximum(resid_var, 1e-12 * max(1.0, float(resid_var.max(initial=0.0))))
        inv = woodbury_inverse(exposures, factor_cov, np.diag(1.0 / floored))
        return sigma, inv
    if name == "static-pca":
        cov = estimate_at(train, t_train, est_cfg,
                          weights=uniform_weights(t_train, t_train),
                          rate_value=static_threshold_rate(n, t_train))
        return cov.sigma_y, cov.sigma_y_inv
    if name == "static-ppca":
        rate = static_threshold_rate(n, t_train) + \
            float(config.sieve_dim) ** (-config.sieve_exponent)
        cov = estimate_at(train, t_train, est_cfg, chars=chars_train,
                          weights=uniform_weights(t_train, t_train),
                          basis_period=t_train, rate_value=rate)
        return cov.sigma_y, cov.sigma_y_inv
    if name == "local-pca":
        cov = estimate_at(train, t_train, est_cfg)
        return cov.sigma_y, cov.sigma_y_inv
    if name == "local-ppca":
        cov = estimate_at(train, t_train, est_cfg, chars=chars_train)
        return cov.sigma_y, cov.sigma_y_inv
    raise ParameterError(f"unknown estimator {name!r}")


def _window_returns(weights: np.ndarray, segment: np.ndarray,
                    drift: bool) -> np.ndarray:
    if not drift:
        return weights @ segment
    out = np.empty(segment.shape[1])
    w = weights.copy()
    for idx in range(segment.shape[1]):
        out[idx] = float(w @ segment[:, idx])
        growth = w * (1.0 + segment[:, idx])
        total = growth.sum()
        if total <= 0:
            raise NumericError("portfolio value hit zero under drift accounting")
        w = growth / total
    return out


def run_backtest(panel, config: BacktestConfig, chars=None, factors=None,
                 sigma_provider: SigmaProvider | None = None) -> BacktestResult:
    """Run the rolling GMV protocol for one estimator.

    chars (N x d x T) are required by the projected estimators; factors
    (K x T) by the observed-factor estimator. A custom `sigma_provider`
    replaces the built-in estimator and receives
    (train, chars_train, factors_train, config, train_end).
    Any estimator failure aborts with the rebalance index.
    """
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    chars_values = getattr(chars, "values", chars)
    if chars_values is not None:
        chars_values = np.asarray(chars_values, dtype=float)
    factor_values = np.asarray(getattr(factors, "values", factors), dtype=float) \
        if factors is not None else None

    if sigma_provider is None:
        if config.estimator in _NEEDS_CHARS and chars_values is None:
            raise ParameterError(f"estimator {config.estimator!r} requires characteristics")
        if config.estimator in _NEEDS_FACTORS and factor_values is None:
            raise ParameterError(f"estimator {config.estimator!r} requires observed factors")

    n, t_total = values.shape
    schedule = build_schedule(t_total, config)
    weights_list: list[np.ndarray] = []
    held: list[np.ndarray] = []
    for window in schedule:
        train = values[:, :window.train_end]
        chars_train = chars_values[:, :, :window.train_end] \
            if chars_values is not None else None
        factors_train = factor_values[:, :window.train_end] \
            if factor_values is not None else None
        try:
            if sigma_provider is not None:
                _, sigma_inv = sigma_provider(train, chars_train, factors_train,
                                              config, window.train_end)
            else:
                _, sigma_inv = _provide_sigma(train, chars_train, factors_train,
                                              config)
            weights = gmv_weights(sigma_inv)
        except Exception as exc:
            raise NumericError(
                f"estimator {config.estimator!r} failed at rebalance "
                f"train_end={window.train_end}: {type(exc).__name__}: {exc}"
            ) from exc
        weights_list.append(weights)
        segment = values[:, window.hold_start - 1:window.hold_end]
        held.append(_window_returns(weights, segment, config.drift))

    portfolio_returns = np.concatenate(held) if held else np.empty(0)
    if portfolio_returns.size >= 2:
        std = float(np.std(portfolio_returns, ddof=1))
    else:
        if portfolio_returns.size:
            warnings.warn("fewer than two held returns; ex-post std set to 0",
                          stacklevel=2)
        std = 0.0
    return BacktestResult(
        estimator=config.estimator,
        schedule=schedule,
        weights_per_rebalance=weights_list,
        portfolio_returns=portfolio_returns,
        ex_post_std_annualized_pct=std * math.sqrt(config.annualization) * 100.0,
    )


def compare_estimators(panel, configs: Sequence[BacktestConfig], chars=None,
                       factors=None) -> list[dict]:
    """Run several estimator configs on the same data; one summary row each."""
    rows = []
    for config in configs:
        result = run_backtest(panel, config, chars=chars, factors=factors)
        rows.append({
            "estimator": config.estimator,
            "ex_post_std_annualized_pct": result.ex_post_std_annualized_pct,
            "n_rebalances": len(result.schedule),
            "n_held_periods": int(result.portfolio_returns.size),
        })
    return rows
