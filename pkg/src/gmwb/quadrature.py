"""Gauss-Hermite quadrature rules and moment-matched weight systems.

The rules approximate integrals against the weight function exp(-x^2),

    integral exp(-x^2) f(x) dx  ~=  sum_i  w_i f(x_i),

with the nodes at the roots of the degree-q (physicists') Hermite polynomial
and the classical weights

    w_i = 2^(q-1) q! sqrt(pi) / (q^2 H_{q-1}(x_i)^2).

A rule of order q integrates polynomials up to degree 2q - 1 exactly, so
expectations of smooth functions under a normal law converge very fast once
the change of variable x = y / sqrt(2) is applied.

Nodes are computed by Newton iteration on the orthonormal three-term
recurrence, seeded with standard asymptotic guesses and refined root by root
from the largest down.  The computed half is mirrored so the rule is exactly
antisymmetric, which keeps downstream results bit-reproducible.

`moment_matched_weights` serves the case where the integrand's distribution
is known only through its moments: it keeps the Hermite nodes but re-solves
for weights that reproduce a supplied sequence of central moments exactly,
up to the residual of the linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError

MAX_ORDER = 64
MAX_MOMENT_ORDER = 16

_PIM4 = math.pi ** -0.25  # value of the degree-0 orthonormal Hermite polynomial
_NEWTON_TOL = 1e-14
_NEWTON_MAX_ITER = 200
_RESIDUAL_TOL = 1e-9
_COND_LIMIT = 1e13


@dataclass(frozen=True)
class HermiteRule:
    """Nodes and weights for integrals against exp(-x^2).

    Nodes are in ascending order, exactly antisymmetric about zero; weights
    are positive and symmetric and sum to sqrt(pi).
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        """Apply the rule to a callable evaluated at the nodes."""
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True)
class MomentWeights:
    """Quadrature weights solved to reproduce a moment sequence.

    ``nodes`` are the generating Hermite abscissas, ``scale`` the spread the
    system was assembled for: equation K states
    sum_i weights_i (scale * nodes_i)^K = moment_K.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    scale: float


def _orthonormal_tail(z: float, order: int, a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Evaluate the orthonormal Hermite polynomials of degree order and order-1 at z."""
    p_prev = 0.0
    p_cur = _PIM4
    for j in range(1, order + 1):
        p_prev, p_cur = p_cur, z * a[j - 1] * p_cur - b[j - 1] * p_prev
    return p_cur, p_prev


def gh_rule(order: int) -> HermiteRule:
    """Build the Gauss-Hermite rule of the given order.

    Parameters
    ----------
    order : int
        Number of nodes, between 1 and ``MAX_ORDER``.

    Returns
    -------
    HermiteRule
    """
    if not isinstance(order, (int, np.integer)):
        raise ValueError(f"order must be an integer, got {order!r}")
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")

    # recurrence coefficients p_j = z*a_j*p_{j-1} - b_j*p_{j-2}
    j = np.arange(1, order + 1, dtype=float)
    a = np.sqrt(2.0 / j)
    b = np.sqrt((j - 1.0) / j)

    half = (order + 1) // 2
    roots: list[float] = []  # positive roots, largest first
    wts: list[float] = []
    z = 0.0
    for i in range(half):
        if i == 0:
            z = math.sqrt(2.0 * order + 1.0) - 1.85575 * (2.0 * order + 1.0) ** (-1.0 / 6.0)
        elif i == 1:
            z -= 1.14 * order ** 0.426 / z
        elif i == 2:
            z = 1.86 * z - 0.86 * roots[0]
        elif i == 3:
            z = 1.91 * z - 0.91 * roots[1]
        else:
            z = 2.0 * z - roots[i - 2]

        converged = False
        for _ in range(_NEWTON_MAX_ITER):
            p_q, p_qm1 = _orthonormal_tail(z, order, a, b)
            deriv = math.sqrt(2.0 * order) * p_qm1
            step = p_q / deriv
            z -= step
            if abs(step) <= _NEWTON_TOL * (1.0 + abs(z)):
                converged = True
                break
        if not converged:
            raise RuntimeError(f"Hermite root {i} of order {order} did not converge")

        _, p_qm1 = _orthonormal_tail(z, order, a, b)
        deriv = math.sqrt(2.0 * order) * p_qm1
        roots.append(z)
        wts.append(2.0 / (deriv * deriv))

    nodes = np.empty(order)
    weights = np.empty(order)
    for rank, (z, w) in enumerate(zip(roots, wts)):
        nodes[order - 1 - rank] = z
        nodes[rank] = -z
        weights[order - 1 - rank] = w
        weights[rank] = w
    # enforce exact antisymmetry (and a hard zero at the centre for odd orders)
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return HermiteRule(order=order, nodes=nodes, weights=weights)


def _double_factorial(n: int) -> int:
    out = 1
    for v in range(n, 1, -2):
        out *= v
    return out


def normal_central_moment(spread: float, degree: int) -> float:
    """Central moment of a normal law with the given standard deviation.

    Odd degrees vanish; even degrees equal spread^K (K-1)!!.  Degree 0 is 1
    by convention, also when the spread is zero.
    """
    if degree < 0 or not isinstance(degree, (int, np.integer)):
        raise ValueError(f"degree must be a non-negative integer, got {degree!r}")
    if not (np.isfinite(spread) and spread >= 0.0):
        raise ValueError(f"spread must be finite and non-negative, got {spread!r}")
    if degree == 0:
        return 1.0
    if degree % 2 == 1:
        return 0.0
    return spread ** degree * float(_double_factorial(degree - 1))


def moment_matched_weights(rule: HermiteRule, moments, scale: float) -> MomentWeights:
    """Solve for weights that reproduce the first q central moments.

    The system has one equation per moment degree K = 0 .. q-1:

        sum_i  w_i (scale * x_i)^K  =  moments[K].

    It is solved in the rescaled variable x_i (dividing equation K by
    scale^K), which keeps the Vandermonde-like matrix independent of the
    scale, followed by one step of iterative refinement.

    Parameters
    ----------
    rule : HermiteRule
        Supplies the nodes; its order is capped at ``MAX_MOMENT_ORDER``
        because the moment system becomes untrustworthy beyond that.
    moments : sequence of float
        Central moments of degrees 0 .. q-1; moments[0] must equal 1.
    scale : float
        Positive spread of the target distribution (its standard deviation
        for a normal law).

    Raises
    ------
    ConditioningError
        If the system is singular, too ill-conditioned, or the solution does
        not reproduce the moments to the required residual.
    """
    q = rule.order
    if q > MAX_MOMENT_ORDER:
        raise ValueError(
            f"moment matching supports orders up to {MAX_MOMENT_ORDER}, got {q}"
        )
    m = np.asarray(moments, dtype=float)
    if m.shape != (q,):
        raise ValueError(f"expected {q} moments, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("moments must be finite")
    if abs(m[0] - 1.0) > 1e-12:
        raise ValueError(f"moment of degree 0 must be 1, got {m[0]!r}")
    if not (np.isfinite(scale) and scale > 0.0):
        raise ValueError(f"scale must be finite and positive, got {scale!r}")

    degrees = np.arange(q)
    system = rule.nodes[np.newaxis, :] ** degrees[:, np.newaxis]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rhs = m / scale ** degrees
    if not np.isfinite(rhs).all():
        raise ConditioningError(q, scale, "rescaled moments overflow")

    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise ConditioningError(q, scale, f"condition estimate {cond:.3g}")

    try:
        w = np.linalg.solve(system, rhs)
        # one round of iterative refinement tightens the residual cheaply
        w -= np.linalg.solve(system, system @ w - rhs)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(q, scale, str(exc)) from exc

    scaled_nodes = scale * rule.nodes
    powers = scaled_nodes[np.newaxis, :] ** degrees[:, np.newaxis]
    residual = powers @ w - m
    floor = np.abs(powers) @ np.abs(w) + np.abs(m)
    if np.any(np.abs(residual) > _RESIDUAL_TOL * np.maximum(floor, 1e-300)):
        worst = float(np.max(np.abs(residual) / np.maximum(floor, 1e-300)))
        raise ConditioningError(q, scale, f"moment residual {worst:.3g}")

    w.flags.writeable = False
    return MomentWeights(order=q, nodes=rule.nodes, weights=w, scale=scale)
