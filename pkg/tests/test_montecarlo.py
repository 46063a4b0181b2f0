"""Forward simulation of the contractual withdrawal schedule."""

import numpy as np
import pytest
from scipy.special import ndtri

from gmwb import GmwbContract, MarketModel, McConfig, mc_static_price
from gmwb.montecarlo import _pair_payoffs

from support import deterministic_static_price, quarterly_contract


def short_setup(vol=0.20, fee=95.81e-4, rate_g=0.10):
    contract = quarterly_contract(rate_g)
    market = MarketModel.flat(0.05, vol, fee, contract.n_periods)
    return contract, market


class TestMcConfig:
    def test_odd_or_tiny_path_counts_rejected(self):
        contract, market = short_setup()
        with pytest.raises(ValueError):
            McConfig(contract, market, paths=999, seed=1)
        with pytest.raises(ValueError):
            McConfig(contract, market, paths=0, seed=1)

    def test_market_length_mismatch_rejected(self):
        contract, _ = short_setup()
        market = MarketModel.flat(0.05, 0.20, 0.0, contract.n_periods - 1)
        with pytest.raises(ValueError):
            McConfig(contract, market, paths=100, seed=1)


class TestMcStaticPrice:
    def test_zero_volatility_is_exact_and_noise_free(self):
        contract, market = short_setup(vol=0.0)
        estimate = mc_static_price(McConfig(contract, market, 1000, seed=3), market.fee)
        assert estimate.std_error == 0.0
        want = deterministic_static_price(contract, 0.05, market.fee)
        np.testing.assert_allclose(estimate.price, want, rtol=1e-12)

    def test_identical_seed_reproduces_the_estimate(self):
        contract, market = short_setup()
        first = mc_static_price(McConfig(contract, market, 20_000, seed=42), market.fee)
        second = mc_static_price(McConfig(contract, market, 20_000, seed=42), market.fee)
        assert first.price == second.price
        assert first.std_error == second.std_error
        other = mc_static_price(McConfig(contract, market, 20_000, seed=43), market.fee)
        assert other.price != first.price

    def test_estimate_brackets_the_premium_at_the_fair_fee(self):
        contract, market = short_setup(fee=95.81e-4)
        estimate = mc_static_price(
            McConfig(contract, market, 400_000, seed=12345), market.fee
        )
        assert estimate.std_error > 0
        assert abs(estimate.price - 100.0) <= 3.0 * estimate.std_error

    def test_standard_error_shrinks_like_the_square_root_of_paths(self):
        contract, market = short_setup()
        base = mc_static_price(McConfig(contract, market, 100_000, seed=9), market.fee)
        wide = mc_static_price(McConfig(contract, market, 400_000, seed=9), market.fee)
        ratio = wide.std_error / base.std_error
        assert 0.4 <= ratio <= 0.6

    def test_deterministic_stream_is_factored_out_of_the_paths(self):
        # replay the generator to rebuild the same draws, then price each
        # path in full, guaranteed stream included; the estimate must match
        contract, market = short_setup()
        paths, seed = 8192, 11
        estimate = mc_static_price(McConfig(contract, market, paths, seed), market.fee)

        rng = np.random.default_rng(seed)
        draws = ndtri(rng.random((paths // 2, contract.n_periods)))
        dt = contract.period_lengths
        drift = (market.rates - market.fee - 0.5 * market.vols**2) * dt
        spread = market.vols * np.sqrt(dt)
        discounts = np.exp(-np.cumsum(market.rates * dt))
        totals = np.zeros(paths // 2)
        for sign in (1.0, -1.0):
            wealth = np.full(paths // 2, contract.premium)
            cash = np.zeros(paths // 2)
            for k in range(contract.n_periods - 1):
                wealth = wealth * np.exp(drift[k] + sign * spread[k] * draws[:, k])
                wealth = np.maximum(wealth - contract.amounts[k], 0.0)
                cash += discounts[k] * contract.amounts[k]
            wealth = wealth * np.exp(drift[-1] + sign * spread[-1] * draws[:, -1])
            remaining = contract.premium - float(np.sum(contract.amounts[:-1]))
            settle = np.maximum(
                wealth,
                np.minimum(remaining, contract.amounts[-1])
                + (1.0 - contract.penalty) * np.maximum(remaining - contract.amounts[-1], 0.0),
            )
            totals += 0.5 * (cash + discounts[-1] * settle)
        np.testing.assert_allclose(estimate.price, totals.mean(), rtol=1e-12)

    def test_negative_fee_rejected(self):
        contract, market = short_setup()
        with pytest.raises(ValueError):
            mc_static_price(McConfig(contract, market, 100, seed=1), -0.01)


class TestAntitheticPairing:
    def test_flipping_the_sign_convention_changes_nothing(self):
        contract, market = short_setup()
        rng = np.random.default_rng(21)
        draws = rng.standard_normal((256, contract.n_periods))
        forward = _pair_payoffs(contract, market, market.fee, draws)
        flipped = _pair_payoffs(contract, market, market.fee, -draws)
        np.testing.assert_array_equal(forward, flipped)

    def test_wrong_draw_shape_rejected(self):
        contract, market = short_setup()
        with pytest.raises(ValueError):
            _pair_payoffs(
                contract, market, market.fee, np.zeros((8, contract.n_periods - 1))
            )
