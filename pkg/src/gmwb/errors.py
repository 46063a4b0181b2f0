"""Exception types shared across the package.

Plain ``ValueError`` is used for malformed arguments (bad shapes, negative
quantities, out-of-range orders).  The classes below mark failures that a
caller may want to handle separately: numerical breakdown inside the pricing
recursion, ill-conditioned weight systems, and root-solver failures.
"""

from __future__ import annotations


class GmwbError(Exception):
    """Base class for package-specific failures."""


class ConditioningError(GmwbError):
    """A moment-matching system was singular or too ill-conditioned to trust.

    Carries the quadrature order and the volatility scale of the offending
    system so the failure can be reported precisely.
    """

    def __init__(self, order: int, scale: float, detail: str = ""):
        self.order = order
        self.scale = scale
        msg = f"moment system of order {order} at scale {scale:.6g} is too ill-conditioned"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class NumericalError(GmwbError):
    """A non-finite value appeared during the backward recursion.

    ``period`` is the one-based withdrawal period being integrated, ``knot``
    the wealth-grid index and ``level`` the guarantee-grid index of the first
    offending entry.
    """

    def __init__(self, period: int, knot: int, level: int):
        self.period = period
        self.knot = knot
        self.level = level
        super().__init__(
            f"non-finite value in period {period} at wealth knot {knot}, "
            f"guarantee level {level}"
        )


class SolverError(GmwbError):
    """Base class for fee-solver failures."""


class NoSolutionError(SolverError):
    """The fee bracket does not straddle the target price."""

    def __init__(self, price_low: float, price_high: float, target: float):
        self.price_low = price_low
        self.price_high = price_high
        self.target = target
        super().__init__(
            f"target {target:.6g} not bracketed: price {price_low:.6g} at the low fee, "
            f"{price_high:.6g} at the high fee"
        )


class ConvergenceError(SolverError):
    """The fee solver hit its iteration cap before meeting tolerance."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations, residual {residual:.3g}"
        )


class DegenerateSensitivityError(SolverError):
    """The price showed no measurable response to the fee perturbation."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated."""
