import numpy as np
import pytest

from tvcov.backtest import (
    BacktestConfig,
    build_schedule,
    gmv_weights,
    observed_factor_covariance,
    run_backtest,
)
from tvcov.errors import (
    ConditioningError,
    DefinitenessError,
    NumericError,
    ParameterError,
)
from tvcov.panel import PanelData
from tvcov.simulation import SimulationConfig, generate_dataset


def identity_provider(train, chars_train, factors_train, config, train_end):
    n = train.shape[0]
    return np.eye(n), np.eye(n)


def make_panel(values):
    n, t = values.shape
    return PanelData(values, [f"e{i}" for i in range(n)],
                     [f"p{j}" for j in range(t)])


class TestGmvWeights:
    def test_identity_equal_weights(self):
        assert np.allclose(gmv_weights(np.eye(3)), 1.0 / 3.0)

    def test_two_asset_hand_solve(self):
        # sigma = diag(1, 2) -> weights (2/3, 1/3)
        sigma_inv = np.diag([1.0, 0.5])
        assert np.allclose(gmv_weights(sigma_inv), [2 / 3, 1 / 3])

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((5, 8))
        sigma_inv = np.linalg.inv(a @ a.T / 8 + 0.5 * np.eye(5))
        assert np.allclose(gmv_weights(sigma_inv), gmv_weights(7.3 * sigma_inv))

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((6, 10))
        sigma_inv = np.linalg.inv(a @ a.T / 10 + np.eye(6))
        assert gmv_weights(sigma_inv).sum() == pytest.approx(1.0, abs=1e-10)

    def test_indefinite_rejected(self):
        with pytest.raises(DefinitenessError):
            gmv_weights(np.diag([1.0, -3.0]))

    def test_optimality_against_random_weights(self):
        rng = np.random.default_rng(2)
        for n in (5, 12, 20):
            a = rng.standard_normal((n, 3 * n))
            sigma = a @ a.T / (3 * n) + 0.2 * np.eye(n)
            w_star = gmv_weights(np.linalg.inv(sigma))
            best = w_star @ sigma @ w_star
            for _ in range(1000):
                z = rng.standard_normal(n)
                w = z - (z.mean() - 1.0 / n)  # sums to one, signs free
                assert best <= w @ sigma @ w + 1e-12


class TestBuildSchedule:
    def test_hand_enumeration(self):
        config = BacktestConfig(initial_training=102, holding_length=26)
        schedule = build_schedule(202, config)
        spans = [(w.train_end, w.hold_start, w.hold_end) for w in schedule]
        assert spans == [
            (102, 103, 128),
            (128, 129, 154),
            (154, 155, 180),
            (180, 181, 202),  # partial final window
        ]

    def test_single_full_window(self):
        config = BacktestConfig(initial_training=102, holding_length=26)
        schedule = build_schedule(128, config)
        assert len(schedule) == 1
        assert schedule[0] == schedule[0].__class__(102, 103, 128)

    def test_empty_schedule_warns(self):
        config = BacktestConfig(initial_training=102, holding_length=26)
        with pytest.warns(UserWarning):
            schedule = build_schedule(102, config)
        assert schedule == []

    def test_coverage_partition(self):
        config = BacktestConfig(initial_training=37, holding_length=11)
        schedule = build_schedule(150, config)
        covered = []
        for window in schedule:
            covered.extend(range(window.hold_start, window.hold_end + 1))
        assert covered == list(range(38, 151))


class TestObservedFactorCovariance:
    def test_perfect_regression_variance(self):
        rng = np.random.default_rng(3)
        t = 120
        factor = rng.standard_normal(t)
        returns = np.vstack([factor, 0.5 * factor + 0.1 * rng.standard_normal(t)])
        sigma = observed_factor_covariance(returns, factor[None, :])
        assert sigma[0, 0] == pytest.approx(np.var(factor, ddof=1), abs=1e-10)

    def test_zero_variance_factor_rejected(self):
        returns = np.random.default_rng(4).standard_normal((3, 50))
        with pytest.raises(ConditioningError):
            observed_factor_covariance(returns, np.ones((1, 50)))

    def test_exposures_match_normal_equations(self):
        rng = np.random.default_rng(5)
        n, k, t = 10, 3, 120
        factors = rng.standard_normal((k, t))
        exposures_true = rng.standard_normal((n, k))
        noise = 0.2 * rng.standard_normal((n, t))
        returns = exposures_true @ factors + noise
        sigma = observed_factor_covariance(returns, factors)
        design = np.column_stack([np.ones(t), factors.T])
        beta = np.linalg.solve(design.T @ design, design.T @ returns.T)
        exposures = beta[1:].T
        resid = returns.T - design @ beta
        resid_var = (resid ** 2).sum(axis=0) / (t - k - 1)
        expected = exposures @ np.cov(factors, ddof=1) @ exposures.T + np.diag(resid_var)
        assert np.linalg.norm(sigma - expected) <= 1e-8 * np.linalg.norm(expected)


class TestRunBacktest:
    def test_constant_returns_zero_std_injected(self):
        values = np.full((4, 60), 0.01)
        panel = make_panel(values)
        config = BacktestConfig(estimator="sample", initial_training=20,
                                holding_length=10)
        result = run_backtest(panel, config, sigma_provider=identity_provider)
        assert result.ex_post_std_annualized_pct == 0.0
        assert np.allclose(result.portfolio_returns, 0.01)

    def test_constant_returns_zero_std_local_pca(self):
        # rank-1 constant panel: residual moments are zero, the jitter
        # fallback supplies an invertible residual matrix
        values = np.tile(np.linspace(0.5, 2.0, 5)[:, None], (1, 80)) * 0.01
        panel = make_panel(values)
        config = BacktestConfig(estimator="local-pca", initial_training=30,
                                holding_length=25, n_factors=1, h=0.2)
        result = run_backtest(panel, config)
        assert result.ex_post_std_annualized_pct == pytest.approx(0.0, abs=1e-10)

    def test_identical_provider_identical_results(self):
        rng = np.random.default_rng(6)
        panel = make_panel(rng.standard_normal((6, 90)))
        config_a = BacktestConfig(estimator="sample", initial_training=30,
                                  holding_length=15)
        config_b = BacktestConfig(estimator="local-pca", initial_training=30,
                                  holding_length=15)
        result_a = run_backtest(panel, config_a, sigma_provider=identity_provider)
        result_b = run_backtest(panel, config_b, sigma_provider=identity_provider)
        assert np.array_equal(result_a.portfolio_returns, result_b.portfolio_returns)
        assert result_a.ex_post_std_annualized_pct == result_b.ex_post_std_annualized_pct

    def test_weights_sum_to_one_and_fixed_windows(self):
        rng = np.random.default_rng(7)
        panel = make_panel(rng.standard_normal((8, 100)))
        config = BacktestConfig(estimator="sample", initial_training=40,
                                holding_length=20)
        result = run_backtest(panel, config)
        for window, weights in zip(result.schedule, result.weights_per_rebalance):
            assert weights.sum() == pytest.approx(1.0, abs=1e-10)
            segment = panel.values[:, window.hold_start - 1:window.hold_end]
            start = window.hold_start - (config.initial_training + 1)
            expected = weights @ segment
            assert np.allclose(
                result.portfolio_returns[start:start + segment.shape[1]], expected)

    def test_failure_reports_rebalance_index(self):
        rng = np.random.default_rng(8)
        panel = make_panel(rng.standard_normal((5, 70)))

        def failing_provider(train, chars_train, factors_train, config, train_end):
            if train_end >= 50:
                raise ValueError("boom")
            n = train.shape[0]
            return np.eye(n), np.eye(n)

        config = BacktestConfig(estimator="sample", initial_training=30,
                                holding_length=20)
        with pytest.raises(NumericError) as info:
            run_backtest(panel, config, sigma_provider=failing_provider)
        assert "train_end=50" in str(info.value)

    def test_prerequisites_checked(self):
        rng = np.random.default_rng(9)
        panel = make_panel(rng.standard_normal((5, 60)))
        with pytest.raises(ParameterError):
            run_backtest(panel, BacktestConfig(estimator="local-ppca",
                                               initial_training=20,
                                               holding_length=10))
        with pytest.raises(ParameterError):
            run_backtest(panel, BacktestConfig(estimator="observed-factor",
                                               initial_training=20,
                                               holding_length=10))

    def test_all_estimators_run_on_simulated_data(self):
        config = SimulationConfig(n_entities=12, n_periods=90, seed=31)
        dataset = generate_dataset(config)
        factors = np.random.default_rng(10).standard_normal((3, 90))
        results = {}
        for estimator in ("sample", "observed-factor", "static-pca",
                          "static-ppca", "local-pca", "local-ppca"):
            bt_config = BacktestConfig(estimator=estimator, initial_training=40,
                                       holding_length=20, h=0.2,
                                       threshold_scale=0.5, sieve_dim=3)
            result = run_backtest(dataset.panel, bt_config, chars=dataset.chars,
                                  factors=factors)
            results[estimator] = result.ex_post_std_annualized_pct
            assert result.ex_post_std_annualized_pct >= 0
            assert len(result.schedule) == 3
        assert len(results) == 6

    def test_drift_accounting_differs(self):
        rng = np.random.default_rng(11)
        panel = make_panel(0.05 * rng.standard_normal((6, 80)))
        base = BacktestConfig(estimator="sample", initial_training=40,
                              holding_length=20)
        drift = BacktestConfig(estimator="sample", initial_training=40,
                               holding_length=20, drift=True)
        fixed_result = run_backtest(panel, base, sigma_provider=identity_provider)
        drift_result = run_backtest(panel, drift, sigma_provider=identity_provider)
        assert fixed_result.portfolio_returns[0] == pytest.approx(
            drift_result.portfolio_returns[0], rel=1e-12)
        assert not np.allclose(fixed_result.portfolio_returns,
                               drift_result.portfolio_returns)

    def test_determinism(self):
        rng = np.random.default_rng(12)
        panel = make_panel(rng.standard_normal((8, 100)))
        config = BacktestConfig(estimator="local-pca", initial_training=40,
                                holding_length=20, h=0.25)
        a = run_backtest(panel, config)
        b = run_backtest(panel, config)
        assert np.array_equal(a.portfolio_returns, b.portfolio_returns)
        assert a.ex_post_std_annualized_pct == b.ex_post_std_annualized_pct
