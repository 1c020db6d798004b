# -*- coding: utf-8 -*-
"""Тесты экспериментов, батареи проверок и конвейера существования"""

import math

import numpy as np
import pytest

from analysis import curvature_ratio_bound, decay_check, drift_H_residual, ratio_subsolution_check
from core import ConeSpec, make_radial_grid
from errors import InvalidParameterError, StageError
from expander_ode import shoot
from experiments import (COMPACTNESS_THRESHOLD, MCF_THRESHOLD, SWEEP_COLUMNS, _aitken, _gap_limit,
                         battery_passed, compactness_sweep, continuity_sweep, existence_pipeline,
                         mcf_vs_shooting, properness_probe, residual_refinement_study,
                         run_experiment, run_rows, verification_battery)
from settings import RunConfig

SMALL = {'nodes': 1024, 'r_max': 20.0}


@pytest.fixture
def config():
    return RunConfig(jobs=1, grid=SMALL, entropy={'restarts': 0, 'max_evaluations': 300})


def test_run_rows_keeps_order():
    assert run_rows(math.sqrt, [1.0, 4.0, 9.0]) == [1.0, 2.0, 3.0]
    assert run_rows(math.sqrt, [1.0, 4.0, 9.0, 16.0], jobs=2) == [1.0, 2.0, 3.0, 4.0]


class TestAitken:
    def test_geometric_sequence(self):
        assert _aitken([1.0, 0.5, 0.25]) == 0.0

    def test_short_sequence(self):
        assert _aitken([0.3, 0.1]) == 0.1

    def test_linear_sequence_falls_back(self):
        assert _aitken([3.0, 2.0, 1.0]) == 1.0


class TestGapLimit:
    def test_quadratic_in_gap(self):
        gaps = np.array([2.0 ** -i for i in range(1, 6)])
        assert _gap_limit(3.0 * gaps - 5.0 * gaps ** 2, gaps) == pytest.approx(0.0, abs=1e-10)

    def test_offset_survives(self):
        gaps = np.array([0.5, 0.25, 0.125])
        assert _gap_limit(0.2 + gaps, gaps) == pytest.approx(0.2)

    def test_short_sequence(self):
        assert _gap_limit(np.array([0.4, 0.1]), np.array([0.5, 0.25])) == 0.1


class TestBattery:
    def test_plane_hypotheses_do_not_fail(self, config):
        result = shoot(2, 0.0, grid=make_radial_grid(256, 16.0))
        reports = verification_battery(result, 2, config)
        statuses = {r.name: r.status for r in reports}
        assert statuses['mean_convexity'] == 'hypothesis-violation'
        assert statuses['curvature_ratio_bound'] == 'hypothesis-violation'
        assert statuses['ratio_subsolution'] == 'hypothesis-violation'
        assert statuses['decay'] == 'hypothesis-violation'
        assert statuses['cauchy_schwarz'] == 'pass'
        assert statuses['drift_H_residual'] == 'pass'
        assert statuses['entropy_identity'] == 'pass'
        assert statuses['area_ratio'] == 'pass'
        assert battery_passed(reports)

    def test_expander_battery_without_entropy(self, expander_n2):
        reports = verification_battery(expander_n2, 2, include_entropy=False)
        assert [r.name for r in reports] == ['mean_convexity', 'cauchy_schwarz', 'H_identity',
                                             'curvature_ratio_bound', 'drift_H_residual',
                                             'ratio_subsolution', 'decay']
        assert all(r.status == 'pass' for r in reports)


class TestPipeline:
    def test_equatorial_link_is_flat(self, config):
        dossier = existence_pipeline(2, math.pi / 2, 0.0, config)
        assert dossier['degenerate'] == 'flat'
        assert dossier['tau'] == 0.0
        assert dossier['lambda'] == 1.0
        assert dossier['passed']

    def test_past_extinction_is_stage_error(self, config):
        with pytest.raises(StageError) as info:
            existence_pipeline(2, math.pi / 4, 0.5, config)
        assert info.value.stage == 'link_flow'
        assert info.value.details['cause_kind'] == 'past-extinction'

    def test_obtuse_link_rejected(self, config):
        with pytest.raises(InvalidParameterError):
            existence_pipeline(2, 2.0, 0.1, config)

    def test_three_dimensional_link(self):
        T = math.log(2.0) / 2.0
        dossier = existence_pipeline(3, math.pi / 3, T / 2, RunConfig(jobs=1), include_entropy=False)
        assert [s['stage'] for s in dossier['stages']] == ['link_flow', 'cone', 'shoot']
        assert dossier['tau'] == pytest.approx(1.0, abs=1e-9)
        link_stage = dossier['stages'][0]
        assert link_stage['pinching_preserved']
        assert link_stage['min_pinching_margin'] > 0
        assert link_stage['extinction_time'] == pytest.approx(T)
        checks = {c['name']: c['status'] for c in dossier['checks']}
        assert checks['curvature_ratio_bound'] == 'pass'
        assert checks['drift_H_residual'] == 'pass'
        assert math.isnan(dossier['lambda'])

    @pytest.mark.slow
    def test_quarter_pi_link_in_the_plane(self):
        T = math.log(2.0) / 2.0
        dossier = existence_pipeline(2, math.pi / 4, T / 2, RunConfig(jobs=1))
        assert dossier['passed']
        assert 1.0 < dossier['lambda'] < 2.0


class TestSweeps:
    def test_unknown_experiment(self, config):
        config.experiments.experiment = 'bogus'
        with pytest.raises(InvalidParameterError):
            run_experiment(config)

    def test_compactness_rejects_flat(self, config):
        with pytest.raises(InvalidParameterError):
            compactness_sweep(2, [0.0, 0.5], 1.0, 10.0, config)

    @pytest.mark.slow
    def test_compactness_distances_decrease(self, config):
        taus = [1.0 + 2.0 ** -i for i in range(1, 11)]
        table = compactness_sweep(2, taus, 1.0, 10.0, config)
        assert list(table.frame.columns[:len(SWEEP_COLUMNS)]) == SWEEP_COLUMNS
        assert table.passed
        assert table.summary['strictly_decreasing']
        assert abs(table.summary['limit_distance']) < COMPACTNESS_THRESHOLD
        assert table.summary['failed_rows'] == 0
        assert table.to_dict()['rows']

    @pytest.mark.slow
    def test_properness(self, config):
        table = properness_probe(2, (0.5, 2.0), 3, config)
        assert table.summary['bounded']
        assert len(table.summary['continuity_moduli']) == 4
        assert table.frame['a'].is_monotonic_increasing

    @pytest.mark.slow
    def test_flow_approaches_expander(self):
        config = RunConfig(jobs=1, grid={'nodes': 640, 'r_max': 20.0})
        table = mcf_vs_shooting(2, 1.0, [1e-1, 1e-2], config)
        assert table.summary['monotone']
        # строки упорядочены по возрастанию eps
        assert table.frame['distance'].iloc[0] < table.frame['distance'].iloc[1]

    @pytest.mark.slow
    @pytest.mark.convergence
    def test_refinement_study(self):
        table = residual_refinement_study(2, 1.0, config=RunConfig(jobs=1))
        assert table.summary['orders']['distance'] >= 1.8
        assert table.summary['orders']['drift_residual_fd'] >= 1.0
        assert table.summary['identities_within_tolerance']
        assert table.passed


@pytest.mark.slow
@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_expander_matrix(n, tau):
    result = shoot(n, tau)
    assert result.slope_error <= RunConfig(jobs=1).solver.slope_tolerance
    assert result.residual_sup < 1e-4
    p = result.profile
    cone = ConeSpec(n, tau)
    bound = curvature_ratio_bound(p, cone, n)
    assert bound.passed
    assert bound.details['max_ratio'] <= (1.0 + 1e-3) / (n - 1)
    assert bound.details['max_pointwise_excess'] <= 1e-3
    assert decay_check(p, cone, n, result.a).passed
    assert drift_H_residual(p, n).sup_residual < 1e-4
    subsolution = ratio_subsolution_check(p, n)
    assert subsolution.sup_residual < 1e-4
    assert subsolution.details['min_value'] >= -1e-4


class TestAcceptanceRuns:
    @pytest.mark.slow
    def test_properness_modulus_halves(self):
        table = properness_probe(2, (0.25, 4.0), 3, RunConfig(jobs=1))
        assert table.passed
        assert table.summary['bounded']
        assert all(0.3 <= q <= 0.7 for q in table.summary['modulus_ratios'])

    @pytest.mark.slow
    def test_cone_entropy_continuity(self):
        table = continuity_sweep(2, 1.0, 8, RunConfig(jobs=1))
        assert table.summary['monotone']
        assert table.summary['final_difference'] < 1e-3
        assert table.passed

    @pytest.mark.slow
    def test_flow_is_self_similar(self):
        table = mcf_vs_shooting(2, 1.0, [1e-2, 1e-3, 1e-4], RunConfig(jobs=1))
        assert table.summary['self_similarity_defect'] < MCF_THRESHOLD
