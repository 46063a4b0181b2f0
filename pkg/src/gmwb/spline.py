"""Natural cubic splines on a uniform knot grid.

The interpolant matches the data at every knot, has zero second derivative
at both ends, and is evaluated by linear extension of the endpoint value and
slope outside the knot span.  On a uniform grid the second-derivative system
is the constant symmetric positive definite tridiagonal [1 4 1], so it is
factorised once when the grid is built (banded Cholesky); each fit then
costs a single pair of banded triangular solves, whatever the number of
value vectors being fitted.

Fits are batched: ``fit`` accepts values of shape (..., M+1) and fits one
spline per leading row, which is how the pricing recursion refits a whole
family of value functions in one call.  Repeated evaluation at a fixed point
set goes through an ``EvalPlan`` so the segment search and cubic basis
coefficients are computed once and reused across fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded


@dataclass(frozen=True)
class EvalPlan:
    """Precomputed segment indices and basis weights for a fixed point set.

    For points inside the knot span the weights implement the cubic segment
    formula; outside they implement linear extension from the nearest end,
    folding the endpoint slope's second-derivative term into ``wd0``/``wd1``
    (valid because the end second derivatives are zero for a natural fit).
    """

    index: np.ndarray
    wy0: np.ndarray
    wy1: np.ndarray
    wd0: np.ndarray
    wd1: np.ndarray


class SplineGrid:
    """Uniform knot grid with a reusable factorisation of the fit system."""

    def __init__(self, x_min: float, x_max: float, segments: int):
        if not isinstance(segments, (int, np.integer)) or segments < 3:
            raise ValueError(f"segments must be an integer >= 3, got {segments!r}")
        if not (np.isfinite(x_min) and np.isfinite(x_max)):
            raise ValueError("grid bounds must be finite")
        if not x_min < x_max:
            raise ValueError(f"need x_min < x_max, got [{x_min}, {x_max}]")
        self.segments = int(segments)
        self.knots = np.linspace(float(x_min), float(x_max), self.segments + 1)
        self.spacing = (float(x_max) - float(x_min)) / self.segments
        # interior system for the knot second derivatives:
        #   s[i-1] + 4 s[i] + s[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h^2
        band = np.ones((2, self.segments - 1))
        band[1] *= 4.0
        self._factor = cholesky_banded(band, lower=False)

    def fit(self, values) -> "SplineFit":
        """Fit natural cubic splines through values of shape (..., M+1)."""
        y = np.asarray(values, dtype=float)
        if y.shape[-1] != self.segments + 1:
            raise ValueError(
                f"expected {self.segments + 1} values on the last axis, got {y.shape}"
            )
        if not np.isfinite(y).all():
            raise ValueError("values must be finite")
        rhs = 6.0 * (y[..., 2:] - 2.0 * y[..., 1:-1] + y[..., :-2]) / self.spacing**2
        flat = rhs.reshape(-1, self.segments - 1).T
        interior = cho_solve_banded((self._factor, False), flat).T
        d2 = np.zeros_like(y)
        d2[..., 1:-1] = interior.reshape(rhs.shape)
        return SplineFit(grid=self, values=y, second_derivs=d2)

    def plan(self, points) -> EvalPlan:
        """Precompute evaluation weights for a set of points."""
        x = np.asarray(points, dtype=float)
        t = (x - self.knots[0]) / self.spacing
        index = np.clip(np.floor(t).astype(np.int64), 0, self.segments - 1)
        bb = t - index
        aa = 1.0 - bb
        h2_over_6 = self.spacing**2 / 6.0
        wd0 = h2_over_6 * (aa**3 - aa)
        wd1 = h2_over_6 * (bb**3 - bb)
        below = bb < 0.0
        above = bb > 1.0
        if below.any():
            wd0 = np.where(below, 0.0, wd0)
            wd1 = np.where(below, -h2_over_6 * bb, wd1)
        if above.any():
            wd0 = np.where(above, -h2_over_6 * aa, wd0)
            wd1 = np.where(above, 0.0, wd1)
        return EvalPlan(index=index, wy0=aa, wy1=bb, wd0=wd0, wd1=wd1)


@dataclass(frozen=True)
class SplineFit:
    """Fitted values and knot second derivatives on a shared grid."""

    grid: SplineGrid
    values: np.ndarray
    second_derivs: np.ndarray

    def __call__(self, points):
        """Evaluate at arbitrary points; see :meth:`eval_plan` for the fast path."""
        return self.eval_plan(self.grid.plan(points))

    def eval_plan(self, plan: EvalPlan):
        """Evaluate using precomputed weights.

        With batched values of shape (..., M+1) and plan points of shape P,
        the result has shape (..., *P).
        """
        y = self.values
        s = self.second_derivs
        i = plan.index
        return (
            plan.wy0 * y[..., i]
            + plan.wy1 * y[..., i + 1]
            + plan.wd0 * s[..., i]
            + plan.wd1 * s[..., i + 1]
        )


def build_grid(x_min: float, x_max: float, segments: int) -> SplineGrid:
    """Create a uniform grid with its fit system factorised."""
    return SplineGrid(x_min, x_max, segments)


def fit(grid: SplineGrid, values) -> SplineFit:
    """Fit natural cubic splines through the given knot values."""
    return grid.fit(values)


def evaluate(spline: SplineFit, points):
    """Evaluate a fitted spline at the given points."""
    x = np.asarray(points, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("evaluation points must be finite")
    return spline(x)
