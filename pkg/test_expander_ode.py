# -*- coding: utf-8 -*-
"""Тесты уравнения экспандера и метода стрельбы"""

import numpy as np
import pytest

from analysis import refinement_order
from core import ConeSpec, Profile, make_radial_grid
from errors import BlowUpError, BracketError, InvalidParameterError, TraceMismatchError
from expander_ode import (NEAR_AXIS, decay_constant, expander_jet, expander_residual,
                          expander_second_derivative, integrate_profile, residual_summary, shoot,
                          slope_map, uniqueness_probe)
from settings import SolverSettings


class TestShooting:
    def test_expander_meets_tolerances(self, expander_n2):
        assert expander_n2.a > 0
        assert expander_n2.slope_error < 1e-6
        # разностная невязка второго порядка на сетке 2048 x 40
        assert expander_n2.residual_sup < 2e-5
        assert expander_n2.scan_table
        meta = expander_n2.profile.meta
        assert meta['kind'] == 'expander'
        assert meta['monotone']

    def test_profile_is_convex_and_above_cone(self, expander_n2):
        p = expander_n2.profile
        assert np.all(p.du >= 0.0)
        assert np.all(p.u > p.r * expander_n2.tau)

    def test_decay_constant_near_leading_coefficient(self, expander_n2):
        # u ~ tau r + (n-1) tau / r на бесконечности
        assert 0.8 < expander_n2.decay_M < 1.5

    def test_report_keys(self, expander_n2):
        report = expander_n2.to_report()
        for key in ('n', 'tau', 'a', 'residual_sup', 'slope_error', 'decay_M', 'iterations', 'grid'):
            assert key in report
        assert report['grid']['N'] == 2048

    def test_flat_cone_gives_plane(self):
        result = shoot(3, 0.0)
        assert result.a == 0.0
        assert np.all(result.profile.u == 0.0)

    @pytest.mark.parametrize("n, tau", [(1, 1.0), (2, -1.0), (2, float('inf'))])
    def test_invalid_input(self, n, tau):
        with pytest.raises(InvalidParameterError):
            shoot(n, tau, grid=make_radial_grid(64, 16.0))

    def test_no_bracket(self):
        settings = SolverSettings(scan_factors=[0.01, 0.02])
        with pytest.raises(BracketError) as info:
            shoot(2, 1.0, grid=make_radial_grid(512, 20.0), settings=settings)
        assert len(info.value.scan_table) == 2

    def test_uniqueness_probe(self):
        a_coarse, a_fine = uniqueness_probe(2, 1.0, grid=make_radial_grid(1024, 20.0))
        assert a_coarse == pytest.approx(a_fine, abs=1e-8)


class TestTrajectories:
    def test_slope_map_is_increasing(self):
        grid = make_radial_grid(1024, 20.0)
        slopes = [slope_map(2, a, grid, 1e-8) for a in (0.5, 1.0, 2.0)]
        assert slopes[0] < slopes[1] < slopes[2]

    def test_blow_up_detected(self):
        with pytest.raises(BlowUpError):
            integrate_profile(2, 5.0, 20.0, 1e-8, grid=make_radial_grid(256, 20.0), slope_cap=1.0)

    def test_axis_height_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            integrate_profile(2, 0.0, 20.0, 1e-8)

    def test_grid_radius_mismatch(self):
        with pytest.raises(InvalidParameterError):
            integrate_profile(2, 1.0, 30.0, 1e-8, grid=make_radial_grid(256, 20.0))

    def test_axis_second_derivative(self):
        r = np.array([0.0, 1.0])
        d2 = expander_second_derivative(r, np.array([3.0, 3.5]), np.array([0.0, 0.5]), 3)
        assert d2[0] == pytest.approx(0.5)
        # (1 + 1/4) * ((3.5 - 0.5)/2 - 2 * 0.5)
        assert d2[1] == pytest.approx(0.625)

    def test_cone_residual(self):
        grid = make_radial_grid(256, 16.0)
        du = np.full_like(grid.nodes, 2.0)
        du[0] = 0.0
        cone = Profile(grid, 2.0 * grid.nodes, du)
        residual = expander_residual(cone, 3)
        # u'' = 0 вдали от оси: остаётся (n-1) tau / r
        inner = slice(5, -5)
        assert np.allclose(residual[inner], 4.0 / grid.nodes[inner])


    def test_nonfinite_residual_is_flagged(self):
        grid = make_radial_grid(64, 16.0)
        du = np.zeros_like(grid.nodes)
        du[10:12] = 1e308
        p = Profile(grid, np.zeros_like(grid.nodes), du)
        with np.errstate(all='ignore'):
            sup, bad = residual_summary(p, 2)
        assert bad > 0
        assert sup == float('inf')

    def test_finite_residual_summary(self):
        grid = make_radial_grid(256, 16.0)
        du = np.full_like(grid.nodes, 2.0)
        du[0] = 0.0
        sup, bad = residual_summary(Profile(grid, 2.0 * grid.nodes, du), 3)
        assert bad == 0
        assert np.isfinite(sup)

class TestDecayConstant:
    def test_inverse_radius_tail(self, derived):
        grid = make_radial_grid(64, 40.0)
        r = grid.nodes
        u = 1.0 / np.maximum(r, 1.0)
        du = np.where(r > 1.0, -1.0 / np.maximum(r, 1.0) ** 2, 0.0)
        p = Profile(grid, u, du)
        assert decay_constant(p, ConeSpec(2, 0.0)) == pytest.approx(derived['decay_inverse_r_rmax40'],
                                                                     rel=1e-5)

    def test_trace_mismatch(self):
        grid = make_radial_grid(64, 40.0)
        zeros = np.zeros_like(grid.nodes)
        with pytest.raises(TraceMismatchError):
            decay_constant(Profile(grid, zeros, zeros), ConeSpec(2, 1.0))


@pytest.mark.slow
@pytest.mark.convergence
def test_residual_second_order():
    nodes = [512, 1024, 2048]
    residuals = [shoot(2, 1.0, grid=make_radial_grid(N, 40.0)).residual_sup for N in nodes]
    assert residuals[0] > residuals[1] > residuals[2]
    assert refinement_order(residuals, nodes) >= 1.8


class TestExpanderJet:
    def test_second_coefficient_matches_equation(self, expander_n2):
        p = expander_n2.profile
        jet = expander_jet(p.r, p.u, p.du, 2)
        regular = p.r >= NEAR_AXIS
        d2 = expander_second_derivative(p.r, p.u, p.du, 2)
        assert np.allclose(2.0 * jet.coefficients[2, regular], d2[regular], rtol=1e-12, atol=1e-14)

    def test_axis_coefficients(self):
        jet = expander_jet(np.zeros(1), np.array([1.5]), np.zeros(1), 3, order=6)
        c = jet.coefficients[:, 0]
        assert c[2] == pytest.approx(1.5 / 12.0)
        # профиль чётный
        assert c[1] == c[3] == c[5] == 0.0
        assert jet.slope_over_r[0, 0] == pytest.approx(2.0 * c[2])

    def test_taylor_polynomial_reaches_next_node(self, expander_n2):
        p = expander_n2.profile
        jet = expander_jet(p.r, p.u, p.du, 2)
        h = np.diff(p.r)
        powers = h[None, :] ** np.arange(jet.order + 1)[:, None]
        predicted_u = np.sum(jet.coefficients[:, :-1] * powers, axis=0)
        slope = np.arange(1, jet.order + 1)[:, None] * jet.coefficients[1:, :-1]
        predicted_du = np.sum(slope * powers[:-1], axis=0)
        assert np.max(np.abs(predicted_u - p.u[1:])) < 1e-7
        assert np.max(np.abs(predicted_du - p.du[1:])) < 1e-6

    def test_slope_over_radius_near_axis(self, expander_n2):
        p = expander_n2.profile
        jet = expander_jet(p.r, p.u, p.du, 2)
        nodes = slice(1, 40)
        assert np.allclose(jet.slope_over_r[0, nodes], p.du[nodes] / p.r[nodes], rtol=1e-7)

    def test_order_too_small(self):
        with pytest.raises(InvalidParameterError):
            expander_jet(np.zeros(1), np.ones(1), np.zeros(1), 2, order=1)
