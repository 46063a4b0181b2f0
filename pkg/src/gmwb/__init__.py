"""Pricing tools for variable annuities with a minimum withdrawal guarantee."""

from .contract import (
    AccountState,
    GmwbContract,
    MarketModel,
    cashflow,
    evolve_wealth,
    terminal_payoff,
)
from .engine import (
    Grids,
    PricingConfig,
    ValueSurface,
    build_grids,
    jump_dynamic,
    jump_static,
    price,
    step_back,
    terminal_surface,
)
from .feesolver import (
    FeeResult,
    fee_std_error_bounds,
    fee_std_error_derivative,
    solve_fair_fee,
)
from .montecarlo import McConfig, McEstimate, mc_static_price
from .quadrature import (
    HermiteRule,
    MomentWeights,
    gh_rule,
    moment_matched_weights,
    normal_central_moment,
)
from .spline import SplineFit, SplineGrid, build_grid, evaluate, fit

__version__ = "0.1.0"

__all__ = [
    "AccountState",
    "FeeResult",
    "GmwbContract",
    "Grids",
    "HermiteRule",
    "MarketModel",
    "McConfig",
    "McEstimate",
    "MomentWeights",
    "PricingConfig",
    "SplineFit",
    "SplineGrid",
    "ValueSurface",
    "build_grid",
    "build_grids",
    "cashflow",
    "evaluate",
    "evolve_wealth",
    "fee_std_error_bounds",
    "fee_std_error_derivative",
    "fit",
    "gh_rule",
    "jump_dynamic",
    "jump_static",
    "mc_static_price",
    "moment_matched_weights",
    "normal_central_moment",
    "price",
    "solve_fair_fee",
    "step_back",
    "terminal_surface",
]
