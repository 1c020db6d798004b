# -*- coding: utf-8 -*-
"""Тесты базовых объектов: сетки, профили, весовые нормы, след на бесконечности"""

import math

import numpy as np
import pytest

from core import (ConeSpec, Profile, RadialGrid, WeightedNormSpec, cone_profile, estimate_trace,
                  homogeneous_extension, make_radial_grid, profile_from_samples, second_derivative,
                  series_derivative, series_div, series_mul, series_sqrt, sphere_meridian,
                  trace_at_infinity, weighted_norm)
from errors import InvalidParameterError, TraceNotConvergedError


class TestRadialGrid:
    def test_uniform_grid(self):
        grid = make_radial_grid(64, 40.0)
        assert grid.N == 64
        assert grid.nodes[0] == 0.0
        assert grid.nodes[-1] == 40.0
        assert np.allclose(grid.spacing, 40.0 / 64)

    def test_geometric_grid_keeps_ratio(self):
        grid = make_radial_grid(200, 40.0, stretch=1.01)
        assert grid.nodes[-1] == 40.0
        ratios = grid.spacing[1:] / grid.spacing[:-1]
        assert np.allclose(ratios, 1.01, rtol=1e-9)
        assert grid.spacing[0] < grid.spacing[-1]

    @pytest.mark.parametrize("N, r_max, stretch", [
        (8, 40.0, 1.0),
        (64, 0.0, 1.0),
        (64, -1.0, 1.0),
        (64, 40.0, 0.9),
    ])
    def test_invalid_grid(self, N, r_max, stretch):
        with pytest.raises(InvalidParameterError):
            make_radial_grid(N, r_max, stretch)

    def test_nodes_are_read_only(self):
        grid = make_radial_grid(32, 10.0)
        with pytest.raises(ValueError):
            grid.nodes[3] = 1.0

    def test_grid_must_start_at_axis(self):
        with pytest.raises(InvalidParameterError):
            RadialGrid(np.linspace(1.0, 10.0, 33))

    def test_scaled_grid(self):
        grid = make_radial_grid(32, 10.0)
        assert grid.scaled(2.0).r_max == 20.0


class TestConeSpec:
    def test_link_angle(self):
        assert ConeSpec(2, 1.0).link_angle == pytest.approx(math.pi / 4)
        assert ConeSpec(3, 0.0).link_angle == pytest.approx(math.pi / 2)

    def test_from_link_angle(self):
        assert ConeSpec.from_link_angle(2, math.pi / 4).tau == pytest.approx(1.0)
        assert ConeSpec.from_link_angle(2, math.pi / 2).tau == 0.0
        assert ConeSpec.from_link_angle(2, math.pi / 2).is_flat

    def test_link_point_on_unit_sphere(self):
        x, z = ConeSpec(4, 2.5).link_point()
        assert math.hypot(x, z) == pytest.approx(1.0)
        assert z / x == pytest.approx(2.5)

    @pytest.mark.parametrize("n, tau", [(1, 1.0), (2, -0.5), (2, float('nan'))])
    def test_invalid_cone(self, n, tau):
        with pytest.raises(InvalidParameterError):
            ConeSpec(n, tau)


class TestProfile:
    def test_nonzero_axis_slope_rejected(self):
        grid = make_radial_grid(32, 10.0)
        du = np.ones_like(grid.nodes)
        with pytest.raises(InvalidParameterError):
            Profile(grid, np.zeros_like(grid.nodes), du)

    def test_nan_rejected(self):
        grid = make_radial_grid(32, 10.0)
        u = np.zeros_like(grid.nodes)
        u[5] = np.nan
        with pytest.raises(InvalidParameterError):
            Profile(grid, u, np.zeros_like(u))

    def test_length_mismatch_rejected(self):
        grid = make_radial_grid(32, 10.0)
        with pytest.raises(InvalidParameterError):
            Profile(grid, np.zeros(10), np.zeros(10))

    def test_cone_profile(self):
        grid = make_radial_grid(32, 10.0)
        p = cone_profile(ConeSpec(2, 0.75), grid)
        assert np.allclose(p.u, 0.75 * grid.nodes)
        assert p.du[0] == 0.0
        assert np.all(p.du[1:] == 0.75)
        assert p.meta['singular_axis']

    def test_scaled_profile(self):
        grid = make_radial_grid(32, 10.0)
        p = profile_from_samples(grid, 1.0 + grid.nodes ** 2)
        q = p.scaled(2.0)
        assert np.allclose(q.r, 2.0 * p.r)
        assert np.allclose(q.u, 2.0 * p.u)
        assert np.array_equal(q.du, p.du)
        assert q.meta['scale'] == 2.0

    def test_samples_derivatives_exact_for_quadratic(self):
        grid = make_radial_grid(64, 10.0)
        p = profile_from_samples(grid, grid.nodes ** 2)
        assert p.du[0] == 0.0
        assert np.allclose(p.du[1:], 2.0 * grid.nodes[1:], atol=1e-10)
        exact = profile_from_samples(grid, grid.nodes ** 2, 2.0 * grid.nodes)
        assert np.allclose(second_derivative(exact), 2.0, atol=1e-10)

    def test_meridian_of_graph(self):
        grid = make_radial_grid(32, 10.0)
        p = profile_from_samples(grid, np.sqrt(1.0 + grid.nodes ** 2))
        curve = p.to_meridian()
        assert np.array_equal(curve.rho, grid.nodes)
        assert np.array_equal(curve.z, p.u)


class TestSphereMeridian:
    def test_closed_and_nonnegative(self):
        curve = sphere_meridian(2.0, N=256)
        assert curve.closed
        assert np.all(curve.rho >= 0)
        assert np.allclose(np.hypot(curve.rho, curve.z), 2.0)

    def test_invalid_radius(self):
        with pytest.raises(InvalidParameterError):
            sphere_meridian(0.0)


class TestWeightedNorm:
    def test_plane_is_zero(self, plane):
        assert weighted_norm(plane, WeightedNormSpec(d=1.0, l=2)) == 0.0

    def test_constant_profile(self, small_grid):
        p = profile_from_samples(small_grid, np.full(small_grid.nodes.size, 3.0),
                                 np.zeros(small_grid.nodes.size))
        assert weighted_norm(p, WeightedNormSpec(d=0.0, l=0)) == pytest.approx(3.0)

    def test_homogeneity_with_fixed_base(self, small_grid):
        r = small_grid.nodes
        p = profile_from_samples(small_grid, np.sqrt(1.0 + r ** 2))
        triple = Profile(small_grid, 3.0 * p.u, 3.0 * p.du)
        spec = WeightedNormSpec(d=1.0, l=2)
        assert weighted_norm(triple, spec, base=p) == pytest.approx(3.0 * weighted_norm(p, spec, base=p))

    def test_triangle_inequality(self, small_grid):
        r = small_grid.nodes
        p = profile_from_samples(small_grid, np.sqrt(1.0 + r ** 2))
        q = profile_from_samples(small_grid, np.cos(r))
        total = Profile(small_grid, p.u + q.u, p.du + q.du)
        spec = WeightedNormSpec(d=1.0, l=1)
        assert weighted_norm(total, spec, base=p) <= \
            weighted_norm(p, spec, base=p) + weighted_norm(q, spec, base=p) + 1e-12

    def test_grid_mismatch(self, plane):
        other = cone_profile(ConeSpec(2, 1.0), make_radial_grid(64, 16.0))
        with pytest.raises(InvalidParameterError):
            weighted_norm(plane, WeightedNormSpec(d=1.0, l=0), base=other)

    def test_invalid_order(self):
        with pytest.raises(InvalidParameterError):
            WeightedNormSpec(d=1.0, l=3)


class TestTrace:
    def test_hyperbola_trace(self):
        grid = make_radial_grid(64, 40.0)
        p = profile_from_samples(grid, 1.5 * np.sqrt(1.0 + grid.nodes ** 2),
                                 1.5 * grid.nodes / np.sqrt(1.0 + grid.nodes ** 2))
        estimate = estimate_trace(p)
        assert estimate.radii == (10.0, 20.0, 40.0)
        assert estimate.value == pytest.approx(1.5, abs=1e-7)
        assert trace_at_infinity(p) == pytest.approx(1.5, abs=1e-7)

    def test_logarithmic_growth_does_not_converge(self):
        grid = make_radial_grid(64, 40.0)
        p = profile_from_samples(grid, grid.nodes * np.log1p(grid.nodes))
        assert estimate_trace(p).spread > 1e-3
        with pytest.raises(TraceNotConvergedError):
            trace_at_infinity(p)

    def test_short_grid_rejected(self):
        short = profile_from_samples(make_radial_grid(64, 5.0), np.zeros(65))
        with pytest.raises(InvalidParameterError):
            estimate_trace(short)


def test_homogeneous_extension():
    assert homogeneous_extension(2.0, 1.0, 3.0) == 6.0
    assert homogeneous_extension(2.0, -2.0, 2.0) == 0.5
    with pytest.raises(InvalidParameterError):
        homogeneous_extension(1.0, 1.0, 0.0)


class TestTruncatedSeries:
    """Ряды в двух узлах сразу: столбцы независимы"""

    def _column(self, *coefficients):
        return np.array(coefficients, dtype=float)[:, None] * np.ones((1, 2))

    def test_geometric_series(self):
        geometric = self._column(1.0, 1.0, 1.0, 1.0)
        one_minus_t = self._column(1.0, -1.0, 0.0, 0.0)
        assert np.allclose(series_mul(geometric, one_minus_t), self._column(1.0, 0.0, 0.0, 0.0))
        assert np.allclose(series_div(self._column(1.0, 0.0, 0.0, 0.0), one_minus_t), geometric)

    def test_division_by_shifted_radius(self):
        # 1/(r0 + t) при r0 = 2
        inverse = series_div(self._column(1.0, 0.0, 0.0, 0.0), self._column(2.0, 1.0, 0.0, 0.0))
        assert np.allclose(inverse[:, 0], [0.5, -0.25, 0.125, -0.0625])

    def test_square_root(self):
        assert np.allclose(series_sqrt(self._column(1.0, 2.0, 1.0, 0.0)), self._column(1.0, 1.0, 0.0, 0.0))
        # sqrt(4 + t) = 2 + t/4 - t^2/64 + t^3/512
        assert np.allclose(series_sqrt(self._column(4.0, 1.0, 0.0, 0.0))[:, 1],
                           [2.0, 0.25, -1.0 / 64.0, 1.0 / 512.0])

    def test_derivative_is_shorter(self):
        derivative = series_derivative(self._column(1.0, 1.0, 1.0, 1.0))
        assert derivative.shape == (3, 2)
        assert np.allclose(derivative[:, 0], [1.0, 2.0, 3.0])
