# -*- coding: utf-8 -*-
"""Тесты кривизн и проверок принципа максимума"""

import numpy as np
import pytest

from analysis import (CURVATURE_COLUMNS, CheckReport, H_identity_check, _geometry_jets,
                      cauchy_schwarz_check, curvature_ratio_bound, curvature_table, curvatures,
                      decay_check, drift_H_residual, graph_window_check, link_ratio,
                      mean_convexity_check, ratio_subsolution_check, refinement_order)
from core import ConeSpec, cone_profile, make_radial_grid
from errors import HypothesisViolationError, InvalidParameterError, WindowEscapesGridError
from expander_ode import shoot


class TestCheckReport:
    def test_nan_residual_fails(self):
        report = CheckReport(name='x', sup_residual=float('nan'), tolerance=1.0)
        assert not report.passed
        assert report.status == 'fail'

    def test_not_applicable(self):
        error = HypothesisViolationError("H = 0", {'min_H': 0.0})
        report = CheckReport.not_applicable('mean_convexity', error)
        assert report.status == 'hypothesis-violation'
        assert report.details == {'min_H': 0.0}
        data = report.to_dict()
        assert data['status'] == 'hypothesis-violation'
        assert data['pass'] is False


class TestCurvatures:
    def test_plane_is_flat(self, plane):
        sample = curvatures(plane, 2)
        assert np.all(sample.H == 0.0)
        assert np.all(sample.A2 == 0.0)
        assert sample.method == 'finite-difference'

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_cone_ratio(self, small_grid, n):
        sample = curvatures(cone_profile(ConeSpec(n, 1.0), small_grid), n)
        assert sample.method == 'cone-exact'
        assert np.allclose(sample.A2[1:] / sample.H[1:] ** 2, 1.0 / (n - 1))

    def test_expander_H_is_support_function(self, expander_n2):
        p = expander_n2.profile
        sample = curvatures(p, 2)
        assert sample.method == 'expander-ode'
        assert np.allclose(sample.H, (p.u - p.r * p.du) / (2.0 * sample.W), rtol=1e-12, atol=1e-14)
        assert sample.umbilic()[0]

    def test_table_columns(self, expander_n2):
        table = curvature_table(curvatures(expander_n2.profile, 2))
        assert list(table.columns) == CURVATURE_COLUMNS
        assert len(table) == expander_n2.profile.grid.N + 1

    def test_invalid_dimension(self, plane):
        with pytest.raises(InvalidParameterError):
            curvatures(plane, 1)


class TestLinkRatio:
    def test_round_link(self, derived):
        assert link_ratio(ConeSpec(3, 2.0)) == pytest.approx(derived['round_link_ratio_n3'])
        assert link_ratio(ConeSpec(2, 0.3)) == pytest.approx(1.0)

    def test_flat_cone(self):
        with pytest.raises(HypothesisViolationError):
            link_ratio(ConeSpec(2, 0.0))


class TestExpanderChecks:
    def test_curvature_ratio_bound(self, expander_n2):
        report = curvature_ratio_bound(expander_n2.profile, ConeSpec(2, 1.0), 2)
        assert report.passed
        assert report.details['4K'] == pytest.approx(1.0)
        assert report.details['max_ratio'] <= 1.0 + 1e-9

    def test_drift_identity(self, expander_n2):
        report = drift_H_residual(expander_n2.profile, 2)
        assert report.method == 'expander-ode'
        assert report.passed
        assert report.tolerance == 1e-4

    def test_drift_identity_by_differences(self, expander_n2):
        report = drift_H_residual(expander_n2.profile, 2, method='finite-difference')
        assert report.method == 'finite-difference'
        assert report.sup_residual < 1e-3

    def test_ratio_subsolution(self, expander_n2):
        report = ratio_subsolution_check(expander_n2.profile, 2)
        assert report.passed
        assert report.tolerance == 1e-4
        assert report.details['min_value'] >= -1e-4

    def test_subsolution_does_not_grow_under_refinement(self, expander_n2):
        coarse = shoot(2, 1.0, grid=make_radial_grid(1024, 40.0))
        residuals = [ratio_subsolution_check(result.profile, 2).sup_residual
                     for result in (coarse, expander_n2)]
        assert all(value < 1e-4 for value in residuals)
        assert residuals[1] <= max(residuals[0], 1e-8)

    def test_jets_agree_with_differences(self, expander_n2):
        p = expander_n2.profile
        jets = _geometry_jets(p, 2)
        sample = curvatures(p, 2)
        assert np.allclose(jets.H[0], sample.H, rtol=1e-6)
        window = (p.r >= 1.0) & (p.r <= 20.0)
        H1 = np.gradient(sample.H, p.r)
        assert np.max(np.abs(jets.H[1][window] - H1[window])) < 1e-4

    def test_H_identity(self, expander_n2):
        report = H_identity_check(expander_n2.profile, 2)
        assert report.passed
        assert report.method == 'finite-difference'

    def test_cauchy_schwarz(self, expander_n2):
        report = cauchy_schwarz_check(curvatures(expander_n2.profile, 2))
        assert report.passed
        assert report.details['umbilic_nodes'] >= 1

    def test_mean_convexity(self, expander_n2):
        report = mean_convexity_check(expander_n2.profile, 2)
        assert report.passed
        assert report.details['min_H'] > 0.0

    def test_decay_is_stable(self, expander_n2):
        report = decay_check(expander_n2.profile, ConeSpec(2, 1.0), 2, expander_n2.a)
        assert report.passed
        assert report.details['r_max_wide'] == 80.0
        assert report.details['limit_value'] == 1.0


class TestHypothesisViolations:
    def test_plane_not_mean_convex(self, plane):
        with pytest.raises(HypothesisViolationError):
            mean_convexity_check(plane, 2)
        with pytest.raises(HypothesisViolationError):
            curvature_ratio_bound(plane, ConeSpec(2, 0.0), 2)
        with pytest.raises(HypothesisViolationError):
            ratio_subsolution_check(plane, 2)

    def test_plane_passes_identities(self, plane):
        assert drift_H_residual(plane, 2).sup_residual == 0.0
        assert H_identity_check(plane, 2).sup_residual == 0.0

    def test_cone_ratio_is_constant(self, cone_n2):
        report = ratio_subsolution_check(cone_n2, 2)
        assert report.sup_residual == 0.0
        assert report.details['min_value'] == 0.0


def test_refinement_order():
    errors = [1e-2, 2.5e-3, 6.25e-4]
    assert refinement_order(errors, [100, 200, 400]) == pytest.approx(2.0, abs=1e-12)
    assert refinement_order([4e-2] + errors, [50, 100, 200, 400]) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        refinement_order([1e-2], [100])


class TestGraphWindow:
    def test_plane(self, plane):
        assert graph_window_check(plane, 2, 40, 0.1, 1.0)

    def test_plane_window_escapes(self, plane):
        with pytest.raises(WindowEscapesGridError):
            graph_window_check(plane, 2, 40, 0.1, 20.0)

    def test_cone_small_window(self, cone_n2):
        assert graph_window_check(cone_n2, 2, 16, 0.5, 0.2)

    def test_cone_window_reaching_vertex(self, cone_n2):
        assert not graph_window_check(cone_n2, 2, 16, 0.5, 10.0)

    @pytest.mark.parametrize("delta, scale_r", [(0.5, 0.2), (0.5, 10.0), (0.3, 0.5)])
    def test_scaling_covariance(self, cone_n2, delta, scale_r):
        scaled = cone_n2.scaled(2.0)
        assert graph_window_check(scaled, 2, 16, delta, 2.0 * scale_r) == \
            graph_window_check(cone_n2, 2, 16, delta, scale_r)

    def test_axis_node_rejected(self, plane):
        with pytest.raises(InvalidParameterError):
            graph_window_check(plane, 2, 0, 0.1, 1.0)
