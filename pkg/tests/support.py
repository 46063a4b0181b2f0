"""Helpers shared across test modules: contracts, markets, and oracles."""

import math

import numpy as np

from gmwb import (
    GmwbContract,
    MarketModel,
    PricingConfig,
    cashflow,
    price,
    solve_fair_fee,
)

TABLE_RATES = (0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.15)


def quarterly_contract(rate_g, penalty=0.10, premium=100.0):
    """Contract withdrawing four times a year until the premium is returned."""
    return GmwbContract(
        premium=premium,
        maturity=1.0 / rate_g,
        withdrawals_per_year=4,
        penalty=penalty,
    )


def flat_market(contract, rate=0.05, vol=0.20, fee=0.0):
    return MarketModel.flat(rate, vol, fee, contract.n_periods)


def deterministic_static_price(contract, rate, fee):
    """Static value with zero volatility, evaluated in closed form.

    The wealth path is deterministic: grow at the fee-drained rate, withdraw
    the contractual amount, floor at zero.  The value is the discounted
    contractual stream plus the discounted terminal settlement.  ``fee`` may
    be an array, in which case one path is rolled per entry.
    """
    fee = np.asarray(fee, dtype=float)
    wealth = np.full(fee.shape, float(contract.premium))
    amounts = contract.amounts
    lengths = contract.period_lengths
    total = 0.0
    for n in range(contract.n_periods - 1):
        wealth = wealth * np.exp((rate - fee) * lengths[n])
        wealth = np.maximum(wealth - amounts[n], 0.0)
        total += math.exp(-rate * contract.dates[n]) * amounts[n]
    wealth = wealth * np.exp((rate - fee) * lengths[-1])
    remaining = contract.premium - float(np.sum(amounts[:-1]))
    settle = np.maximum(wealth, cashflow(remaining, amounts[-1], contract.penalty))
    out = total + math.exp(-rate * contract.maturity) * settle
    return out if out.ndim else float(out)


def solve_table_fee(rate_g, mode, *, penalty=0.10, withdrawals_per_year=4,
                    rate=0.05, sigma=0.20, num_segments=400, num_levels=None,
                    quad_order=9, variant="density"):
    """Fair fee in basis points for one row of a fee table."""
    contract = GmwbContract(
        premium=100.0,
        maturity=1.0 / rate_g,
        withdrawals_per_year=withdrawals_per_year,
        penalty=penalty,
    )
    config = PricingConfig(
        mode=mode,
        variant=variant,
        num_segments=num_segments,
        num_guarantee_levels=num_levels,
        quad_order=quad_order,
    )

    def price_at(alpha):
        market = MarketModel.flat(rate, sigma, alpha, contract.n_periods)
        return price(contract, market, config)

    return solve_fair_fee(price_at, contract.premium).fee * 1e4
