"""Realized third-moment variation, hedged returns, the hedge-number
optimizer, QQ diagnostics, and the cost backtest."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailhedge import realized
from tailhedge.errors import DataError, InsolvencyError
from tailhedge.models import SwapSpec
from tailhedge.realized import (
    BacktestConfig,
    ReturnPath,
    backtest,
    hedged_log_return,
    optimize_hedge_number,
    path_from_csv,
    path_to_csv,
    qq_points,
    swap_payoff,
    third_moment_variation,
)


def _path(returns, horizon=1.0):
    times = np.linspace(0.0, horizon, len(returns))
    return ReturnPath(times=times, log_returns=np.asarray(returns, float))


class TestThirdMomentVariation:
    def test_hand_evaluated_sum(self):
        # 0.1*0.01 + (-0.15)*(0.0025 - 0.01)
        assert third_moment_variation(_path([0.0, 0.1, -0.05])) == \
            pytest.approx(0.002125)

    def test_single_jump_then_constant(self):
        path = _path([0.0, 0.03, 0.03, 0.03])
        assert third_moment_variation(path) == pytest.approx(0.03 * 0.0009)

    def test_too_short(self):
        with pytest.raises(DataError):
            third_moment_variation(_path([0.0]))

    @given(st.lists(st.floats(-0.2, 0.2), min_size=2, max_size=30))
    def test_odd_under_sign_flip(self, increments):
        r = np.concatenate([[0.0], np.cumsum(increments)])
        plus = third_moment_variation(_path(list(r)))
        minus = third_moment_variation(_path(list(-r)))
        # R -> -R leaves R^2 unchanged, so the variation flips sign
        assert minus == pytest.approx(-plus, abs=1e-12)


class TestSwapPayoff:
    def test_sign_and_scaling(self):
        path = _path([0.0, -0.02, -0.06])
        var = third_moment_variation(path)
        spec = SwapSpec(maturity_T=1.0, beta=40.0, notional_scale=1.0)
        assert swap_payoff(path, spec) == pytest.approx(40.0 * (-var))

    def test_zero_hedge_pays_fixed_leg(self):
        path = _path([0.0, 0.1, -0.05])
        spec = SwapSpec(maturity_T=1.0, beta=0.0, fixed_leg=0.25)
        assert swap_payoff(path, spec) == pytest.approx(-0.25)

    def test_hand_composed_value(self):
        path = _path([0.0, 0.1, -0.05])
        spec = SwapSpec(maturity_T=1.0, beta=10.0, notional_scale=100.0)
        assert swap_payoff(path, spec) == pytest.approx(-2.125)


class TestHedgedLogReturn:
    def test_unhedged_identity(self):
        path = _path([0.0, 0.05, 0.02])
        spec = SwapSpec(maturity_T=1.0, beta=0.0)
        assert hedged_log_return(path, spec, "exact") == pytest.approx(0.02)
        assert hedged_log_return(path, spec, "linearized") == \
            pytest.approx(0.02)

    def test_exact_and_linearized_values(self):
        # a two-step path engineered to have variation exactly -0.001
        path = _path([0.0, -0.07718657417857769, 0.02])
        var = third_moment_variation(path)
        assert var == pytest.approx(-0.001, abs=1e-12)
        spec = SwapSpec(maturity_T=1.0, beta=40.0)
        exact = hedged_log_return(path, spec, "exact")
        assert exact == pytest.approx(np.log(np.exp(0.02) + 0.04))
        assert hedged_log_return(path, spec, "linearized") == \
            pytest.approx(0.06)

    def test_insolvency_raised(self):
        path = _path([0.0, 0.5, 0.02])
        spec = SwapSpec(maturity_T=1.0, beta=50.0)
        with pytest.raises(InsolvencyError):
            hedged_log_return(path, spec, "exact")


class TestQqPoints:
    def test_three_point_interpolation_convention(self):
        pts = qq_points([-1.0, 0.0, 1.0], 3)
        assert pts[:, 1] == pytest.approx([-1.0, 0.0, 1.0])

    def test_left_skew_below_line(self):
        rng = np.random.default_rng(0)
        x = -rng.gamma(2.0, 1.0, size=5000)
        x = (x - x.mean()) / x.std()
        pts = qq_points(x, 99)
        assert np.all(pts[:5, 1] < pts[:5, 0])

    def test_empty(self):
        with pytest.raises(DataError):
            qq_points([], 3)


class TestOptimizeHedgeNumber:
    def test_flat_objective_returns_lower_bound(self):
        rng = np.random.default_rng(1)
        r = rng.normal(0.0, 0.1, size=500)
        beta = optimize_hedge_number(r, np.zeros_like(r), search=(5.0, 60.0))
        assert beta == pytest.approx(5.0)

    def test_recovers_planted_optimum(self):
        # X(beta) = r - beta*y is exactly normal at beta = 25
        rng = np.random.default_rng(2)
        z = rng.normal(0.0, 0.08, size=20000)
        skew_part = 0.012 * (rng.gamma(2.0, 1.0, size=20000) - 2.0)
        r = z + 25.0 * skew_part
        beta = optimize_hedge_number(r, skew_part, search=(0.0, 100.0))
        assert beta == pytest.approx(25.0, abs=3.0)

    def test_too_few_samples(self):
        with pytest.raises(DataError):
            optimize_hedge_number(np.zeros(10), np.zeros(10))


class TestBacktest:
    def test_zero_beta_pass_through(self):
        r = [0.0, 0.01, -0.02, 0.03, 0.005]
        result = backtest(_path(r), SwapSpec(maturity_T=1.0, beta=0.0),
                          BacktestConfig(rebalance_interval=2))
        assert result.portfolio_value == pytest.approx(np.exp(r))
        assert not result.insolvent

    def test_single_window_adds_swap_payoff(self):
        r = [0.0, 0.1, -0.05]
        path = _path(r)
        spec = SwapSpec(maturity_T=1.0, beta=40.0)
        result = backtest(path, spec, BacktestConfig(rebalance_interval=2))
        expected = np.exp(-0.05) + 40.0 * (-0.002125)
        assert result.portfolio_value[-1] == pytest.approx(expected)

    def test_multi_leg_costs_exceed_single(self):
        rng = np.random.default_rng(3)
        r = np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.01, 40))])
        path = _path(list(r))
        spec = SwapSpec(maturity_T=1.0, beta=10.0)
        single = backtest(path, spec,
                          BacktestConfig(rebalance_interval=10,
                                         cost_rate=0.005, multi_leg=True))
        rolling = backtest(path, spec,
                           BacktestConfig(rebalance_interval=10,
                                          cost_rate=0.005, multi_leg=False))
        assert rolling.portfolio_value[-1] < single.portfolio_value[-1]

    def test_path_shorter_than_window(self):
        with pytest.raises(DataError):
            backtest(_path([0.0, 0.01]), SwapSpec(maturity_T=1.0, beta=0.0),
                     BacktestConfig(rebalance_interval=5))


class TestCsv:
    def test_path_round_trip(self):
        path = _path([0.0, 0.013, -0.0271])
        again = path_from_csv(path_to_csv(path))
        assert again.times == pytest.approx(path.times)
        assert again.log_returns == pytest.approx(path.log_returns)

    def test_malformed_row_reports_line(self):
        text = "time,log_return\n0,0\n0.5,oops\n"
        with pytest.raises(DataError, match="3"):
            path_from_csv(text)

    def test_first_return_must_be_zero(self):
        with pytest.raises(DataError):
            ReturnPath(times=np.array([0.0, 1.0]),
                       log_returns=np.array([0.1, 0.2]))

    def test_times_strictly_increasing(self):
        with pytest.raises(DataError):
            ReturnPath(times=np.array([0.0, 0.0]),
                       log_returns=np.array([0.0, 0.1]))
