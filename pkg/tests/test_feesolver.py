"""Fair-fee root solving and fee standard-error translation."""

import numpy as np
import pytest

from gmwb import (
    MarketModel,
    McConfig,
    fee_std_error_bounds,
    fee_std_error_derivative,
    mc_static_price,
    solve_fair_fee,
)
from gmwb.errors import (
    ConvergenceError,
    DegenerateSensitivityError,
    NoSolutionError,
)

from support import (
    deterministic_static_price,
    quarterly_contract,
    solve_table_fee,
)


def linear_price(premium=100.0, slope=340.0, root=0.0095):
    """Price model W0 - slope * (fee - root), exactly linear in the fee."""
    return lambda fee: premium - slope * (fee - root)


class TestSolveFairFee:
    def test_finds_the_root_of_a_linear_price(self):
        result = solve_fair_fee(linear_price(), 100.0)
        assert abs(result.fee - 0.0095) <= 1e-4 / 340.0
        assert result.residual <= 1e-4
        assert result.iterations >= 1

    def test_finds_the_root_of_a_convex_price(self):
        price_fn = lambda fee: 101.0 - 200.0 * fee**2
        result = solve_fair_fee(price_fn, 100.0)
        np.testing.assert_allclose(result.fee, np.sqrt(1.0 / 200.0), rtol=1e-4)

    def test_zero_volatility_fee_matches_a_dense_scan(self):
        # the deterministic price has a closed form, so its root can be
        # located independently by brute force on a fine fee grid
        contract = quarterly_contract(0.10)
        fees = np.arange(0.0, 0.02, 1e-7)
        prices = deterministic_static_price(contract, 0.05, fees)
        scan_root = fees[np.searchsorted(-prices, -100.0)]
        result = solve_fair_fee(
            lambda fee: deterministic_static_price(contract, 0.05, fee),
            100.0,
            tol=1e-6,
        )
        assert abs(result.fee - scan_root) <= 2e-7

    def test_bisection_agrees_with_newton(self):
        for price_fn in (linear_price(), lambda fee: 101.0 - 200.0 * fee**2):
            newton = solve_fair_fee(price_fn, 100.0, method="newton")
            bisect = solve_fair_fee(price_fn, 100.0, method="bisection")
            sensitivity = fee_std_error_derivative(price_fn, newton.fee, 1.0)
            assert abs(newton.fee - bisect.fee) <= 2.0 * 1e-4 * sensitivity

    @pytest.mark.parametrize("rate_g", [0.05, 0.10, 0.15])
    def test_bisection_agrees_with_newton_on_priced_contracts(self, rate_g):
        from gmwb import PricingConfig, price

        contract = quarterly_contract(rate_g)
        config = PricingConfig(mode="static")

        def price_at(fee):
            market = MarketModel.flat(0.05, 0.20, fee, contract.n_periods)
            return price(contract, market, config)

        newton = solve_fair_fee(price_at, 100.0, method="newton")
        bisect = solve_fair_fee(price_at, 100.0, method="bisection")
        sensitivity = fee_std_error_derivative(price_at, newton.fee, 1.0)
        assert abs(newton.fee - bisect.fee) <= 2.0 * 1e-4 * sensitivity

    def test_unbracketed_target_reports_both_end_prices(self):
        price_fn = linear_price(premium=90.0)
        with pytest.raises(NoSolutionError) as excinfo:
            solve_fair_fee(price_fn, 100.0)
        assert excinfo.value.target == 100.0
        assert excinfo.value.price_low == price_fn(0.0)
        assert excinfo.value.price_high == price_fn(0.10)

    def test_iteration_cap_raises_with_the_residual(self):
        price_fn = lambda fee: 101.0 - 200.0 * fee**2
        with pytest.raises(ConvergenceError) as excinfo:
            solve_fair_fee(price_fn, 100.0, tol=1e-12, max_iterations=2)
        assert excinfo.value.iterations == 2
        assert excinfo.value.residual > 0

    def test_invalid_arguments_rejected(self):
        with pytest.raises(ValueError):
            solve_fair_fee(linear_price(), -1.0)
        with pytest.raises(ValueError):
            solve_fair_fee(linear_price(), 100.0, tol=0.0)
        with pytest.raises(ValueError):
            solve_fair_fee(linear_price(), 100.0, bracket=(0.1, 0.1))
        with pytest.raises(ValueError):
            solve_fair_fee(linear_price(), 100.0, method="brent")


class TestFeeStandardErrors:
    def test_linear_model_gives_exact_translations(self):
        price_fn = linear_price(slope=340.0)
        result = solve_fair_fee(price_fn, 100.0)
        price_se = 0.0527
        np.testing.assert_allclose(
            fee_std_error_bounds(price_fn, 100.0, price_se),
            price_se / 340.0,
            rtol=1e-6,
        )
        np.testing.assert_allclose(
            fee_std_error_derivative(price_fn, result.fee, price_se),
            price_se / 340.0,
            rtol=1e-12,
        )

    def test_zero_price_noise_means_zero_fee_noise(self):
        price_fn = linear_price()
        assert fee_std_error_bounds(price_fn, 100.0, 0.0) == 0.0
        assert fee_std_error_derivative(price_fn, 0.0095, 0.0) == 0.0

    def test_unreachable_shifted_target_propagates(self):
        # the linear model only spans prices 69.2 to 103.2 on the bracket,
        # so a 50-unit shift pushes one side's target out of reach
        with pytest.raises(NoSolutionError):
            fee_std_error_bounds(linear_price(), 100.0, price_se=50.0)

    def test_flat_price_raises_degenerate_sensitivity(self):
        with pytest.raises(DegenerateSensitivityError):
            fee_std_error_derivative(lambda fee: 100.0, 0.01, 0.1)

    def test_invalid_arguments_rejected(self):
        with pytest.raises(ValueError):
            fee_std_error_bounds(linear_price(), 100.0, -0.1)
        with pytest.raises(ValueError):
            fee_std_error_derivative(linear_price(), 0.0, 0.1)

    def test_both_methods_agree_on_a_simulated_price(self):
        # a seeded simulation is a deterministic, nearly linear function of
        # the fee, so the bounds and derivative translations of its noise
        # must land within ten percent of each other
        contract = quarterly_contract(0.10)
        paths, seed = 200_000, 98765

        def price_at(fee):
            market = MarketModel.flat(0.05, 0.20, fee, contract.n_periods)
            return mc_static_price(McConfig(contract, market, paths, seed), fee).price

        result = solve_fair_fee(price_at, 100.0)
        market = MarketModel.flat(0.05, 0.20, result.fee, contract.n_periods)
        estimate = mc_static_price(McConfig(contract, market, paths, seed), result.fee)
        by_bounds = fee_std_error_bounds(price_at, 100.0, estimate.std_error)
        by_derivative = fee_std_error_derivative(
            price_at, result.fee, estimate.std_error
        )
        assert abs(by_bounds - by_derivative) <= 0.10 * max(by_bounds, by_derivative)


class TestTableMonotonicity:
    def test_static_fee_increases_with_the_contractual_rate(self, static_table_fees):
        fees, _ = static_table_fees
        ordered = [fees[g] for g in sorted(fees)]
        assert all(a < b for a, b in zip(ordered, ordered[1:]))
