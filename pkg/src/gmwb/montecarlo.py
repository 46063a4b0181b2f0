"""Monte Carlo pricing of the static withdrawal strategy.

Used as an independent check on the backward-induction engine: the wealth
account is simulated with one exact lognormal step per withdrawal period,
the contractual amount is withdrawn at every date before maturity, and the
terminal payoff settles whatever guarantee balance is left.  The guaranteed
cash stream is deterministic, so it is priced in closed form and only the
terminal payoff is averaged over paths.

Paths come in antithetic pairs (the two legs share a draw with opposite
signs); the average of each pair is the independent sampling unit for the
standard error.  Draws are made by inverse transform of a seeded 64-bit
generator in a fixed chunk order, so an estimate depends only on the seed
and the path count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .contract import GmwbContract, MarketModel, terminal_payoff

_CHUNK_PAIRS = 1 << 16


@dataclass(frozen=True)
class McConfig:
    """Path budget, seed, and the priced contract and market."""

    contract: GmwbContract
    market: MarketModel
    paths: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.paths, (int, np.integer)) or self.paths < 2:
            raise ValueError(f"paths must be an integer >= 2, got {self.paths!r}")
        if self.paths % 2:
            raise ValueError(f"paths must be even (antithetic pairs), got {self.paths}")
        if len(self.market.rates) != self.contract.n_periods:
            raise ValueError(
                f"market arrays have length {len(self.market.rates)}, contract has "
                f"{self.contract.n_periods} periods"
            )


def _per_period_terms(contract: GmwbContract, market: MarketModel, fee: float):
    dt = contract.period_lengths
    drift = (market.rates - fee - 0.5 * market.vols**2) * dt
    spread = market.vols * np.sqrt(dt)
    discounts = np.exp(-np.cumsum(market.rates * dt))
    return drift, spread, discounts


def _pair_payoffs(contract: GmwbContract, market: MarketModel, fee: float,
                  draws: np.ndarray) -> np.ndarray:
    """Average discounted terminal payoff of each antithetic pair.

    ``draws`` has one row per pair and one column per period; the second leg
    of each pair uses the negated draws.  Swapping the sign convention only
    reorders the two legs, so the result is invariant under it.
    """
    n = contract.n_periods
    if draws.ndim != 2 or draws.shape[1] != n:
        raise ValueError(f"draws must have shape (pairs, {n}), got {draws.shape}")
    drift, spread, discounts = _per_period_terms(contract, market, fee)
    w_up = np.full(draws.shape[0], contract.premium)
    w_dn = np.full(draws.shape[0], contract.premium)
    for k in range(n):
        z = draws[:, k]
        w_up = w_up * np.exp(drift[k] + spread[k] * z)
        w_dn = w_dn * np.exp(drift[k] - spread[k] * z)
        if k < n - 1:
            amount = contract.amounts[k]
            w_up = np.maximum(w_up - amount, 0.0)
            w_dn = np.maximum(w_dn - amount, 0.0)
    remaining = contract.premium - float(np.sum(contract.amounts[:-1]))
    final = contract.amounts[-1]
    pay_up = terminal_payoff(w_up, remaining, final, contract.penalty)
    pay_dn = terminal_payoff(w_dn, remaining, final, contract.penalty)
    return discounts[-1] * (0.5 * (pay_up + pay_dn))


@dataclass(frozen=True)
class McEstimate:
    """Point estimate, standard error of the estimate, and path count."""

    price: float
    std_error: float
    paths: int


def mc_static_price(config: McConfig, fee: float) -> McEstimate:
    """Price the static strategy by simulation at the given rider fee.

    The deterministic guaranteed stream is added in closed form; paths only
    carry the discounted terminal payoff.  Chunks of pairs are processed in
    a fixed order, so the estimate is reproducible for a given seed
    regardless of memory limits.
    """
    if not (np.isfinite(fee) and fee >= 0):
        raise ValueError(f"fee must be non-negative, got {fee!r}")
    contract = config.contract
    market = config.market
    _, _, discounts = _per_period_terms(contract, market, fee)
    guaranteed = float(np.sum(discounts[:-1] * contract.amounts[:-1]))

    n_pairs = config.paths // 2
    rng = np.random.default_rng(config.seed)
    # sums are accumulated around the first payoff so the variance keeps its
    # precision, and collapses to an exact zero when every pair agrees
    shift = None
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_pairs:
        chunk = min(_CHUNK_PAIRS, n_pairs - done)
        draws = ndtri(rng.random((chunk, contract.n_periods)))
        pay = _pair_payoffs(contract, market, fee, draws)
        if shift is None:
            shift = float(pay[0])
        pay -= shift
        total += float(np.sum(pay))
        total_sq += float(np.sum(pay * pay))
        done += chunk

    mean = total / n_pairs
    if n_pairs > 1:
        variance = max(total_sq - n_pairs * mean * mean, 0.0) / (n_pairs - 1)
    else:
        variance = 0.0
    return McEstimate(
        price=guaranteed + shift + mean,
        std_error=math.sqrt(variance / n_pairs),
        paths=config.paths,
    )
