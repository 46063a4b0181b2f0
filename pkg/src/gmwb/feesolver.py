"""Root solver for the fair rider fee.

The fair fee makes the contract value at inception equal the premium.  The
price is strictly decreasing in the fee, so the root is bracketed and then
found by Newton iteration with a numerically differenced slope, falling
back to bisection whenever a Newton step would leave the bracket.  The
bracket is maintained throughout, which keeps the solver robust to noisy
price functions (a seeded Monte Carlo pricer is deterministic in the fee,
so it works here too).

Two standard-error translations from price uncertainty to fee uncertainty
are provided: re-solving at prices shifted one standard error either way,
and dividing by the locally differenced price sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DegenerateSensitivityError, NoSolutionError

DEFAULT_BRACKET = (0.0, 0.10)
MAX_ITERATIONS = 50

# central-difference perturbation: 1% of the current fee, floored at 0.1 bp
_REL_STEP = 0.01
_ABS_STEP_FLOOR = 1e-5


@dataclass
class FeeResult:
    """Solved fee with solver diagnostics and optional error estimates."""

    fee: float
    iterations: int
    residual: float
    se_bounds: float | None = None
    se_derivative: float | None = None


def _validate_target(premium: float, tol: float | None) -> float:
    if not (np.isfinite(premium) and premium > 0):
        raise ValueError(f"premium must be positive, got {premium!r}")
    if tol is None:
        tol = 1e-6 * premium
    if not (np.isfinite(tol) and tol > 0):
        raise ValueError(f"tol must be positive, got {tol!r}")
    return tol


def solve_fair_fee(
    price_fn: Callable[[float], float],
    premium: float,
    tol: float | None = None,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    method: str = "newton",
    max_iterations: int = MAX_ITERATIONS,
) -> FeeResult:
    """Solve price_fn(fee) = premium for the fee.

    Parameters
    ----------
    price_fn : callable
        Deterministic, strictly decreasing map from fee to price.
    premium : float
        Target value.
    tol : float, optional
        Convergence threshold on |price - premium|; defaults to 1e-6 of the
        premium.
    bracket : (float, float)
        Fee interval that must straddle the target.
    method : str
        "newton" (with bisection fallback) or "bisection".
    """
    tol = _validate_target(premium, tol)
    lo, hi = bracket
    if not (np.isfinite(lo) and np.isfinite(hi) and 0 <= lo < hi):
        raise ValueError(f"bracket must satisfy 0 <= low < high, got {bracket!r}")
    if method not in ("newton", "bisection"):
        raise ValueError(f"method must be 'newton' or 'bisection', got {method!r}")

    price_lo = price_fn(lo)
    price_hi = price_fn(hi)
    if abs(price_lo - premium) <= tol:
        return FeeResult(fee=lo, iterations=0, residual=abs(price_lo - premium))
    if abs(price_hi - premium) <= tol:
        return FeeResult(fee=hi, iterations=0, residual=abs(price_hi - premium))
    if not price_lo > premium > price_hi:
        raise NoSolutionError(price_low=price_lo, price_high=price_hi, target=premium)

    # secant start from the bracket ends; the price is close to linear in
    # the fee, so this usually lands within a few basis points of the root
    fee = lo + (price_lo - premium) * (hi - lo) / (price_lo - price_hi)
    for iteration in range(1, max_iterations + 1):
        residual = price_fn(fee) - premium
        if abs(residual) <= tol:
            return FeeResult(fee=fee, iterations=iteration, residual=abs(residual))
        if residual > 0:
            lo = fee
        else:
            hi = fee
        candidate = None
        if method == "newton":
            step = max(_REL_STEP * fee, _ABS_STEP_FLOOR)
            slope = (price_fn(fee + step) - price_fn(fee - step)) / (2.0 * step)
            if slope < 0:
                candidate = fee - residual / slope
        if candidate is None or not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        fee = candidate
    raise ConvergenceError(iterations=max_iterations, residual=abs(residual))


def fee_std_error_bounds(
    price_fn: Callable[[float], float],
    premium: float,
    price_se: float,
    tol: float | None = None,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
) -> float:
    """Half the spread between fees solved at premium -/+ one price SE."""
    tol = _validate_target(premium, tol)
    if not (np.isfinite(price_se) and price_se >= 0):
        raise ValueError(f"price_se must be non-negative, got {price_se!r}")
    if price_se == 0.0:
        return 0.0
    upper = solve_fair_fee(price_fn, premium - price_se, tol=tol, bracket=bracket)
    lower = solve_fair_fee(price_fn, premium + price_se, tol=tol, bracket=bracket)
    return 0.5 * (upper.fee - lower.fee)


def fee_std_error_derivative(
    price_fn: Callable[[float], float],
    fee: float,
    price_se: float,
) -> float:
    """Price SE divided by the locally differenced price sensitivity."""
    if not (np.isfinite(fee) and fee > 0):
        raise ValueError(f"fee must be positive, got {fee!r}")
    if not (np.isfinite(price_se) and price_se >= 0):
        raise ValueError(f"price_se must be non-negative, got {price_se!r}")
    if price_se == 0.0:
        return 0.0
    step = _REL_STEP * fee
    slope = (price_fn(fee + step) - price_fn(fee - step)) / (2.0 * step)
    if slope == 0.0 or not np.isfinite(slope):
        raise DegenerateSensitivityError(
            f"price did not respond to a fee perturbation of {step!r}"
        )
    return abs(price_se / slope)
