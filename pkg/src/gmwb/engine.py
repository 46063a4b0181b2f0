"""Backward-induction pricer on a log-wealth grid.

The value of the guarantee is computed by walking the withdrawal dates from
maturity to inception.  Between consecutive dates the wealth account has an
exact lognormal transition, so the conditional expectation of the value
function is a Gaussian integral; it is evaluated in one quadrature step per
period (no time sub-stepping is needed) by fitting a natural cubic spline
through the value function in X = ln(W / premium) and applying a
Gauss-Hermite rule to the spline.  At each withdrawal date a jump condition
connects the value after the withdrawal to the value before it: the static
walk takes the contractual amount, the dynamic walk maximises over all
admissible withdrawals on an auxiliary grid of guarantee balances.

Two quadrature variants are supported: "density", which weights spline
values by the explicit Gaussian density, and "moment", which re-solves for
weights reproducing the first q central moments of the log-wealth increment
and so never references the density itself.

The wealth grid is uniform in X between a floor fixed at 1e-12 of the
premium and a cap of five reference standard deviations of terminal
log-wealth.  Keeping the floor relative to the premium makes prices exactly
homogeneous in the premium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contract import GmwbContract, MarketModel, cashflow
from .errors import NumericalError
from .quadrature import HermiteRule, MomentWeights, gh_rule, moment_matched_weights, normal_central_moment
from .spline import SplineFit, SplineGrid

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2 = math.sqrt(2.0)

# lower wealth bound as a fraction of the premium; X_min = ln of this
WEALTH_FLOOR_RATIO = 1e-12
# the wealth cap sits this many reference standard deviations up in X
WEALTH_CAP_DEVS = 5.0

_MONTHLY_LEVELS = 300
_DEFAULT_LEVELS = 100


@dataclass(frozen=True)
class PricingConfig:
    """Numerical settings for the backward induction.

    ``num_guarantee_levels`` of ``None`` resolves to 300 for monthly-or-finer
    withdrawal schedules and 100 otherwise.  ``sigma_ref`` overrides the
    reference volatility used to place the upper wealth bound (the default
    is the largest per-period volatility).  ``substeps`` splits each period
    into equal sub-intervals with no withdrawal between them; the transition
    being exact, this exists only to let tests verify that sub-stepping does
    not change prices.
    """

    mode: str = "dynamic"
    variant: str = "density"
    num_segments: int = 400
    num_guarantee_levels: int | None = None
    quad_order: int = 9
    sigma_ref: float | None = None
    substeps: int = 1

    def __post_init__(self):
        if self.mode not in ("static", "dynamic"):
            raise ValueError(f"mode must be 'static' or 'dynamic', got {self.mode!r}")
        if self.variant not in ("density", "moment"):
            raise ValueError(f"variant must be 'density' or 'moment', got {self.variant!r}")
        if not isinstance(self.num_segments, (int, np.integer)) or self.num_segments < 3:
            raise ValueError(f"num_segments must be an integer >= 3, got {self.num_segments!r}")
        if self.num_guarantee_levels is not None and (
            not isinstance(self.num_guarantee_levels, (int, np.integer))
            or self.num_guarantee_levels < 2
        ):
            raise ValueError(
                f"num_guarantee_levels must be an integer >= 2, got {self.num_guarantee_levels!r}"
            )
        if self.sigma_ref is not None and not (
            np.isfinite(self.sigma_ref) and self.sigma_ref >= 0
        ):
            raise ValueError(f"sigma_ref must be non-negative, got {self.sigma_ref!r}")
        if not isinstance(self.substeps, (int, np.integer)) or self.substeps < 1:
            raise ValueError(f"substeps must be a positive integer, got {self.substeps!r}")

    def resolve_levels(self, contract: GmwbContract) -> int:
        if self.num_guarantee_levels is not None:
            return int(self.num_guarantee_levels)
        return _MONTHLY_LEVELS if contract.withdrawals_per_year >= 12 else _DEFAULT_LEVELS


@dataclass(frozen=True, eq=False)
class Grids:
    """Discretisation shared by every step of one pricing run."""

    x: np.ndarray                # log-wealth knots, uniform
    wealth: np.ndarray           # premium * exp(x)
    levels: np.ndarray           # guarantee balances, ascending
    dates: np.ndarray            # withdrawal dates t_1 .. t_N
    period_lengths: np.ndarray   # year fractions between them
    spline: SplineGrid
    premium: float
    _plan_cache: dict = field(default_factory=dict, repr=False)

    def jump_plan(self, shift: float):
        """Evaluation plan for wealth shifted down by a withdrawal.

        Shifted wealth at or below the grid floor evaluates at the floor
        knot itself rather than extrapolating.
        """
        key = float(shift)
        plan = self._plan_cache.get(key)
        if plan is None:
            floor = self.wealth[0]
            shifted = np.maximum(self.wealth - key, floor)
            plan = self.spline.plan(np.log(shifted / self.premium))
            self._plan_cache[key] = plan
        return plan


@dataclass(frozen=True)
class ValueSurface:
    """Value function on the wealth grid, one row per guarantee level.

    ``time_index`` is the withdrawal-date index the values refer to; the
    orchestration in :func:`price` tracks which side of the date's
    withdrawal they are on.
    """

    time_index: int
    values: np.ndarray
    fit: SplineFit
    grids: Grids


def build_grids(contract: GmwbContract, market: MarketModel, config: PricingConfig) -> Grids:
    """Lay out the wealth and guarantee grids for one pricing run."""
    if len(market.rates) != contract.n_periods:
        raise ValueError(
            f"market arrays have length {len(market.rates)}, contract has "
            f"{contract.n_periods} periods"
        )
    sigma_ref = config.sigma_ref
    if sigma_ref is None:
        sigma_ref = float(market.vols.max())
    x_min = math.log(WEALTH_FLOOR_RATIO)
    x_max = WEALTH_CAP_DEVS * sigma_ref * math.sqrt(contract.maturity)
    spline_grid = SplineGrid(x_min, x_max, config.num_segments)
    wealth = contract.premium * np.exp(spline_grid.knots)
    wealth.flags.writeable = False
    if config.mode == "dynamic":
        levels = np.linspace(0.0, contract.premium, config.resolve_levels(contract))
    else:
        # the single guarantee balance left at maturity under the
        # contractual schedule
        remaining = contract.premium - float(np.sum(contract.amounts[:-1]))
        levels = np.array([remaining])
    levels.flags.writeable = False
    return Grids(
        x=spline_grid.knots,
        wealth=wealth,
        levels=levels,
        dates=contract.dates,
        period_lengths=contract.period_lengths,
        spline=spline_grid,
        premium=contract.premium,
    )


def terminal_surface(contract: GmwbContract, grids: Grids) -> ValueSurface:
    """Value at maturity: wealth, or the remaining guarantee cashed out."""
    final_amount = contract.amounts[-1]
    cashed = cashflow(grids.levels, final_amount, contract.penalty)
    values = np.maximum(grids.wealth[np.newaxis, :], np.atleast_1d(cashed)[:, np.newaxis])
    return ValueSurface(
        time_index=contract.n_periods,
        values=values,
        fit=grids.spline.fit(values),
        grids=grids,
    )


def _scheme_arrays(scheme, spread: float) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature offsets in X and matching weights for one transition."""
    if isinstance(scheme, MomentWeights):
        if not math.isclose(scheme.scale, spread, rel_tol=1e-9, abs_tol=1e-300):
            raise ValueError(
                f"moment weights were built for spread {scheme.scale!r}, "
                f"transition has {spread!r}"
            )
        return scheme.scale * scheme.nodes, scheme.weights
    if isinstance(scheme, HermiteRule):
        return _SQRT_2 * spread * scheme.nodes, scheme.weights / _SQRT_PI
    raise TypeError(f"unsupported quadrature scheme {type(scheme).__name__}")


def _diffuse(surface: ValueSurface, dt: float, rate: float, vol: float, fee: float,
             scheme, period: int) -> ValueSurface:
    """One exact lognormal transition of length dt, backwards.

    Evaluates the fitted value function at the quadrature images of every
    knot and contracts with the scheme's weights, then discounts.
    """
    grids = surface.grids
    drift = (rate - fee - 0.5 * vol * vol) * dt
    spread = vol * math.sqrt(dt)
    offsets, weights = _scheme_arrays(scheme, spread)
    points = grids.x[:, np.newaxis] + drift + offsets[np.newaxis, :]
    plan = grids.spline.plan(points)
    integrated = surface.fit.eval_plan(plan) @ weights
    integrated *= math.exp(-rate * dt)
    if not np.isfinite(integrated).all():
        level, knot = np.argwhere(~np.isfinite(integrated))[0]
        raise NumericalError(period=period, knot=int(knot), level=int(level))
    # guard against microscopic spline overshoot below zero
    np.maximum(integrated, 0.0, out=integrated)
    return ValueSurface(
        time_index=surface.time_index - 1,
        values=integrated,
        fit=grids.spline.fit(integrated),
        grids=grids,
    )


def step_back(surface: ValueSurface, period: int, market: MarketModel, scheme) -> ValueSurface:
    """Integrate the value function back across one withdrawal period.

    ``surface`` holds values just before the withdrawal at the period's end
    date; the result holds values just after the withdrawal at its start
    date.  ``scheme`` is either a :class:`HermiteRule` (density weights) or
    :class:`MomentWeights` built for this period's volatility spread.
    """
    n_periods = len(surface.grids.period_lengths)
    if not 1 <= period <= n_periods:
        raise ValueError(f"period must be in [1, {n_periods}], got {period}")
    return _diffuse(
        surface,
        dt=float(surface.grids.period_lengths[period - 1]),
        rate=float(market.rates[period - 1]),
        vol=float(market.vols[period - 1]),
        fee=market.fee,
        scheme=scheme,
        period=period,
    )


def jump_static(surface: ValueSurface, period: int, contract: GmwbContract) -> ValueSurface:
    """Apply the contractual withdrawal of one date to a single-track surface."""
    grids = surface.grids
    amount = float(contract.amounts[period - 1])
    plan = grids.jump_plan(amount)
    values = surface.fit.eval_plan(plan) + amount
    return ValueSurface(
        time_index=period,
        values=values,
        fit=grids.spline.fit(values),
        grids=grids,
    )


def jump_dynamic(surface: ValueSurface, period: int, contract: GmwbContract) -> ValueSurface:
    """Maximise over admissible withdrawals on the guarantee grid.

    A withdrawal moves the account from guarantee level j to some level
    k <= j, pays the cashflow of the difference, and knocks the same amount
    off wealth (floored at zero).  Level spacing being uniform from zero,
    the withdrawal sizes are the levels themselves, indexed by j - k.

    Withdrawing exactly the contractual amount must always be admissible,
    or the optimum could fall below the value of simply following the
    contract.  When that amount is not a whole number of level spacings,
    the landing balance sits between two levels and the candidate value is
    the linear blend of the two neighbouring tracks at the shifted wealth.
    """
    grids = surface.grids
    amount = float(contract.amounts[period - 1])
    levels = grids.levels
    n_levels = len(levels)
    cash = np.atleast_1d(cashflow(levels, amount, contract.penalty))
    fit = surface.fit
    # distance 0 means no withdrawal: the surface itself
    best = surface.values.copy()
    for d in range(1, n_levels):
        plan = grids.jump_plan(float(levels[d]))
        source = SplineFit(
            grid=fit.grid,
            values=fit.values[: n_levels - d],
            second_derivs=fit.second_derivs[: n_levels - d],
        )
        candidate = source.eval_plan(plan)
        candidate += cash[d]
        np.maximum(best[d:], candidate, out=best[d:])
    _blend_contractual(best, surface, amount)
    return ValueSurface(
        time_index=period,
        values=best,
        fit=grids.spline.fit(best),
        grids=grids,
    )


def _blend_contractual(best: np.ndarray, surface: ValueSurface, amount: float) -> None:
    """Fold the penalty-free contractual withdrawal into the running maximum.

    Balances at or below the contractual amount already surrender in full
    through the on-grid candidates, so only tracks that land strictly
    between two levels need the blended evaluation.  The blend weight is
    the same for every track because the levels are uniformly spaced.
    """
    grids = surface.grids
    levels = grids.levels
    n_levels = len(levels)
    if n_levels < 2 or amount <= 0.0:
        return
    spacing = levels[1] - levels[0]
    steps = amount / spacing
    upper = math.ceil(steps)
    weight = upper - steps          # share of the higher neighbouring track
    if weight <= 0.0 or upper >= n_levels:
        # the amount is a whole number of spacings: already an on-grid jump
        return
    fit = surface.fit
    plan = grids.jump_plan(amount)
    low = SplineFit(
        grid=fit.grid,
        values=fit.values[: n_levels - upper],
        second_derivs=fit.second_derivs[: n_levels - upper],
    )
    high = SplineFit(
        grid=fit.grid,
        values=fit.values[1 : n_levels - upper + 1],
        second_derivs=fit.second_derivs[1 : n_levels - upper + 1],
    )
    candidate = (1.0 - weight) * low.eval_plan(plan)
    candidate += weight * high.eval_plan(plan)
    candidate += amount
    np.maximum(best[upper:], candidate, out=best[upper:])


def price(contract: GmwbContract, market: MarketModel, config: PricingConfig) -> float:
    """Present value of the contract at inception, in currency units.

    Walks the withdrawal dates backwards: one quadrature transition per
    period, a jump condition at every date except maturity (whose
    withdrawal is part of the terminal condition).  The final transition to
    inception is carried out only for the track whose guarantee balance
    equals the premium, which is where the contract starts.
    """
    grids = build_grids(contract, market, config)
    rule = gh_rule(config.quad_order)
    moment_cache: dict[float, MomentWeights] = {}

    def scheme_for(spread: float):
        if config.variant == "density" or spread == 0.0:
            return rule
        weights = moment_cache.get(spread)
        if weights is None:
            moments = [normal_central_moment(spread, k) for k in range(rule.order)]
            weights = moment_matched_weights(rule, moments, spread)
            moment_cache[spread] = weights
        return weights

    def transition(surface: ValueSurface, period: int) -> ValueSurface:
        dt_full = float(contract.period_lengths[period - 1])
        rate = float(market.rates[period - 1])
        vol = float(market.vols[period - 1])
        dt = dt_full / config.substeps
        spread = vol * math.sqrt(dt)
        for _ in range(config.substeps):
            surface = _diffuse(surface, dt, rate, vol, market.fee,
                               scheme_for(spread), period)
        return surface

    surface = terminal_surface(contract, grids)
    for n in range(contract.n_periods, 1, -1):
        surface = transition(surface, n)
        if config.mode == "dynamic":
            surface = jump_dynamic(surface, n - 1, contract)
        else:
            surface = jump_static(surface, n - 1, contract)
    if config.mode == "dynamic":
        # only the full-guarantee track matters for the final transition
        surface = ValueSurface(
            time_index=surface.time_index,
            values=surface.values[-1:],
            fit=SplineFit(
                grid=surface.fit.grid,
                values=surface.fit.values[-1:],
                second_derivs=surface.fit.second_derivs[-1:],
            ),
            grids=grids,
        )
    surface = transition(surface, 1)
    at_premium = surface.fit.eval_plan(grids.spline.plan(np.zeros(1)))
    return float(at_premium[0, 0])
