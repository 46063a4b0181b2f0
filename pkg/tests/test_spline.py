"""Natural cubic spline fitting and evaluation."""

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from gmwb import build_grid, evaluate, fit


class TestBuildGrid:
    def test_knots_are_uniform(self):
        grid = build_grid(0.0, 1.0, 4)
        np.testing.assert_allclose(grid.knots, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
        assert grid.spacing == 0.25

    def test_too_few_segments_rejected(self):
        with pytest.raises(ValueError):
            build_grid(0.0, 1.0, 2)

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            build_grid(1.0, 0.0, 10)
        with pytest.raises(ValueError):
            build_grid(0.0, np.inf, 10)


class TestFit:
    def test_reproduces_linear_data_everywhere(self):
        grid = build_grid(-2.0, 3.0, 50)
        spline = fit(grid, 3.0 * grid.knots - 1.0)
        rng = np.random.default_rng(11)
        # includes points beyond both ends, where the extension is linear
        points = rng.uniform(-3.0, 4.0, size=200)
        np.testing.assert_allclose(
            evaluate(spline, points), 3.0 * points - 1.0, rtol=1e-12, atol=1e-12
        )

    def test_reproduces_constant_data(self):
        grid = build_grid(0.0, 1.0, 10)
        spline = fit(grid, np.full(11, 7.0))
        points = np.linspace(-0.5, 1.5, 40)
        np.testing.assert_allclose(evaluate(spline, points), 7.0, rtol=1e-14)

    def test_interpolates_knot_values(self):
        grid = build_grid(-1.0, 2.0, 30)
        values = np.sin(3.0 * grid.knots) + grid.knots**2
        spline = fit(grid, values)
        np.testing.assert_allclose(
            evaluate(spline, grid.knots), values, rtol=1e-12, atol=1e-12
        )

    def test_fourth_order_convergence_on_smooth_data(self):
        # sin on [0, pi] has zero curvature at both ends, so the natural
        # boundary condition is exact and halving the spacing divides the
        # error by about sixteen
        dense = np.linspace(0.0, np.pi, 2003)

        def max_error(segments):
            grid = build_grid(0.0, np.pi, segments)
            spline = fit(grid, np.sin(grid.knots))
            return np.max(np.abs(evaluate(spline, dense) - np.sin(dense)))

        ratio = max_error(50) / max_error(100)
        assert 14.0 <= ratio <= 18.0

    def test_matches_reference_spline_between_knots(self):
        grid = build_grid(0.0, 2.0, 25)
        values = np.exp(-grid.knots) * np.cos(4.0 * grid.knots)
        spline = fit(grid, values)
        reference = CubicSpline(grid.knots, values, bc_type="natural")
        midpoints = grid.knots[:-1] + 0.5 * grid.spacing
        np.testing.assert_allclose(
            evaluate(spline, midpoints), reference(midpoints), rtol=1e-10, atol=1e-10
        )

    def test_first_derivative_continuous_at_knots(self):
        grid = build_grid(0.0, 1.0, 20)
        values = np.cos(5.0 * grid.knots)
        spline = fit(grid, values)
        y = spline.values
        s = spline.second_derivs
        h = grid.spacing
        # one-sided slopes at each interior knot from the segment formula
        from_left = (y[1:-1] - y[:-2]) / h + h * (s[:-2] + 2.0 * s[1:-1]) / 6.0
        from_right = (y[2:] - y[1:-1]) / h - h * (2.0 * s[1:-1] + s[2:]) / 6.0
        np.testing.assert_allclose(from_left, from_right, rtol=1e-10, atol=1e-10)

    def test_natural_end_conditions_are_exact_zeros(self):
        grid = build_grid(0.0, 1.0, 15)
        spline = fit(grid, np.exp(grid.knots))
        assert spline.second_derivs[0] == 0.0
        assert spline.second_derivs[-1] == 0.0

    def test_extension_beyond_ends_is_linear(self):
        grid = build_grid(0.0, 1.0, 12)
        spline = fit(grid, np.exp(grid.knots))
        outside = np.array([1.1, 1.4, 1.7, -0.3, -0.6, -0.9])
        values = evaluate(spline, outside)
        # collinear triples on each side
        np.testing.assert_allclose(
            values[1] - values[0], values[2] - values[1], rtol=1e-10
        )
        np.testing.assert_allclose(
            values[4] - values[3], values[5] - values[4], rtol=1e-10
        )

    def test_batched_fit_matches_row_by_row(self):
        grid = build_grid(-1.0, 1.0, 18)
        rng = np.random.default_rng(3)
        values = rng.standard_normal((4, 19))
        batched = fit(grid, values)
        points = np.linspace(-1.4, 1.4, 33)
        together = evaluate(batched, points)
        for row in range(4):
            single = evaluate(fit(grid, values[row]), points)
            np.testing.assert_array_equal(together[row], single)

    def test_wrong_length_rejected(self):
        grid = build_grid(0.0, 1.0, 10)
        with pytest.raises(ValueError):
            fit(grid, np.zeros(10))

    def test_non_finite_values_rejected(self):
        grid = build_grid(0.0, 1.0, 10)
        values = np.zeros(11)
        values[4] = np.nan
        with pytest.raises(ValueError):
            fit(grid, values)

    def test_non_finite_points_rejected(self):
        grid = build_grid(0.0, 1.0, 10)
        spline = fit(grid, np.zeros(11))
        with pytest.raises(ValueError):
            evaluate(spline, np.array([0.1, np.nan]))
