"""Contract terms, market model, and account dynamics.

A guaranteed minimum withdrawal benefit rider lets the policyholder draw
down the initial premium through a schedule of withdrawal dates regardless
of how the invested wealth account performs.  Withdrawals up to the
contractual amount of each date are penalty-free; the excess of larger
withdrawals is paid out reduced by the penalty rate.  Between dates the
wealth account follows geometric Brownian motion drained by the continuously
charged rider fee; the guarantee account only ever changes by withdrawals.

All percent-like quantities (rates, volatilities, fees, penalty) are plain
decimal fractions here; formatting in percent or basis points belongs to the
command-line layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

# tolerance absorbing float noise in n_periods = ceil(frequency * maturity)
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class GmwbContract:
    """Terms of the withdrawal guarantee.

    Parameters
    ----------
    premium : float
        Initial payment; both accounts start here.
    maturity : float
        Contract horizon in years.
    withdrawals_per_year : int
        Number of withdrawal dates per year.
    penalty : float
        Fraction withheld from the part of a withdrawal exceeding the
        contractual amount, in [0, 1].
    """

    premium: float
    maturity: float
    withdrawals_per_year: int
    penalty: float = 0.10

    def __post_init__(self):
        if not (np.isfinite(self.premium) and self.premium > 0):
            raise ValueError(f"premium must be positive, got {self.premium!r}")
        if not (np.isfinite(self.maturity) and self.maturity > 0):
            raise ValueError(f"maturity must be positive, got {self.maturity!r}")
        if (
            not isinstance(self.withdrawals_per_year, (int, np.integer))
            or self.withdrawals_per_year < 1
        ):
            raise ValueError(
                f"withdrawals_per_year must be a positive integer, "
                f"got {self.withdrawals_per_year!r}"
            )
        if not 0.0 <= self.penalty <= 1.0:
            raise ValueError(f"penalty must be in [0, 1], got {self.penalty!r}")

    @cached_property
    def n_periods(self) -> int:
        """Number of withdrawal dates; the last one falls on the maturity."""
        return int(math.ceil(self.withdrawals_per_year * self.maturity - _CEIL_EPS))

    @cached_property
    def dates(self) -> np.ndarray:
        """Withdrawal dates t_1 < ... < t_N = maturity."""
        t = np.arange(1, self.n_periods + 1) / self.withdrawals_per_year
        t = np.minimum(t, self.maturity)
        t[-1] = self.maturity
        t.flags.writeable = False
        return t

    @cached_property
    def period_lengths(self) -> np.ndarray:
        """Year fractions between consecutive withdrawal dates."""
        dt = np.diff(self.dates, prepend=0.0)
        dt.flags.writeable = False
        return dt

    @cached_property
    def amounts(self) -> np.ndarray:
        """Contractual withdrawal amount of each date, proportional to its period."""
        g = self.premium * self.period_lengths / self.maturity
        g.flags.writeable = False
        return g

    @property
    def annual_rate(self) -> float:
        """Guaranteed withdrawal rate per year as a fraction of the premium."""
        return 1.0 / self.maturity


@dataclass(frozen=True, eq=False)
class MarketModel:
    """Per-period risk-free rates and volatilities plus the rider fee.

    The arrays hold one value per withdrawal period, so their length must
    equal the contract's number of periods wherever the two meet.
    """

    rates: np.ndarray
    vols: np.ndarray
    fee: float

    def __post_init__(self):
        object.__setattr__(self, "rates", np.atleast_1d(np.asarray(self.rates, dtype=float)))
        object.__setattr__(self, "vols", np.atleast_1d(np.asarray(self.vols, dtype=float)))
        if self.rates.ndim != 1 or self.vols.ndim != 1:
            raise ValueError("rates and vols must be one-dimensional")
        if self.rates.shape != self.vols.shape:
            raise ValueError(
                f"rates and vols must have equal length, got {self.rates.shape} "
                f"and {self.vols.shape}"
            )
        if not (np.isfinite(self.rates).all() and np.isfinite(self.vols).all()):
            raise ValueError("rates and vols must be finite")
        if (self.vols < 0).any():
            raise ValueError("vols must be non-negative")
        if not (np.isfinite(self.fee) and self.fee >= 0):
            raise ValueError(f"fee must be non-negative, got {self.fee!r}")
        self.rates.flags.writeable = False
        self.vols.flags.writeable = False

    @classmethod
    def flat(cls, rate: float, vol: float, fee: float, n_periods: int) -> "MarketModel":
        """Constant rate and volatility across all periods."""
        return cls(
            rates=np.full(n_periods, float(rate)),
            vols=np.full(n_periods, float(vol)),
            fee=fee,
        )

    def with_fee(self, fee: float) -> "MarketModel":
        return replace(self, fee=fee)


@dataclass(frozen=True)
class AccountState:
    """Wealth and guarantee balances at an instant."""

    wealth: float
    guarantee: float

    def __post_init__(self):
        if not (np.isfinite(self.wealth) and self.wealth >= 0):
            raise ValueError(f"wealth must be non-negative, got {self.wealth!r}")
        if not (np.isfinite(self.guarantee) and self.guarantee >= 0):
            raise ValueError(f"guarantee must be non-negative, got {self.guarantee!r}")


def cashflow(amount, contractual, penalty):
    """Net payment received for a withdrawal.

    Amounts up to the contractual one pass through unchanged; the excess is
    reduced by the penalty rate.  Broadcasts over array inputs.
    """
    amount = np.asarray(amount, dtype=float)
    contractual = np.asarray(contractual, dtype=float)
    if (amount < 0).any():
        raise ValueError("withdrawal amount must be non-negative")
    if (contractual < 0).any():
        raise ValueError("contractual amount must be non-negative")
    if not 0.0 <= penalty <= 1.0:
        raise ValueError(f"penalty must be in [0, 1], got {penalty!r}")
    out = np.where(
        amount <= contractual,
        amount,
        contractual + (1.0 - penalty) * (amount - contractual),
    )
    return out if out.ndim else float(out)


def terminal_payoff(wealth, guarantee, final_contractual, penalty):
    """Payoff at maturity: the wealth account, or the guarantee cashed out.

    Whatever guarantee balance is left is treated as one last withdrawal
    against the final date's contractual amount.  Broadcasts over arrays.
    """
    wealth = np.asarray(wealth, dtype=float)
    if (wealth < 0).any():
        raise ValueError("wealth must be non-negative")
    out = np.maximum(wealth, cashflow(guarantee, final_contractual, penalty))
    return out if out.ndim else float(out)


def evolve_wealth(wealth, period: int, z, contract: GmwbContract, market: MarketModel):
    """Wealth account at the end of a period, given its normal draw.

    Applies one exact lognormal transition with the period's rate and
    volatility, net of the continuously charged fee.  Broadcasts over
    ``wealth`` and ``z``; zero wealth stays zero.
    """
    if not 1 <= period <= contract.n_periods:
        raise ValueError(f"period must be in [1, {contract.n_periods}], got {period}")
    dt = contract.period_lengths[period - 1]
    r = market.rates[period - 1]
    sigma = market.vols[period - 1]
    drift = (r - market.fee - 0.5 * sigma * sigma) * dt
    spread = sigma * math.sqrt(dt)
    wealth = np.asarray(wealth, dtype=float)
    out = wealth * np.exp(drift + spread * np.asarray(z, dtype=float))
    return out if out.ndim else float(out)
