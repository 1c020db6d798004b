# -*- coding: utf-8 -*-
"""
Численные эксперименты над отображением tau -> экспандер:
компактность, собственность, сравнение потока со стрельбой,
батарея проверок и конвейер существования для омбилических звеньев.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from analysis import (CheckReport, H_identity_check, cauchy_schwarz_check, curvature_ratio_bound,
                      curvatures, decay_check, drift_H_residual, mean_convexity_check,
                      ratio_subsolution_check, refinement_order)
from core import ConeSpec, RadialGrid, make_radial_grid
from entropy import (area_ratio_check, cone_entropy, entropy_continuity_experiment,
                     entropy_of_profile, entropy_sweep)
from errors import ExpanderLabError, HypothesisViolationError, InvalidParameterError, StageError
from expander_ode import ShootingResult, residual_summary, shoot
from flow import (FlowParams, evolve_radial_mcf, extinction_time, link_mean_convex,
                  link_sphere_flow, mollified_cone, pinching_check, self_similarity_defect)
from settings import RunConfig

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['parameter', 'distance', 'distance_c0', 'a', 'lambda', 'checks_passed',
                 'error_kind', 'error']
MCF_THRESHOLD = 5e-3
COMPACTNESS_THRESHOLD = 1e-4
ENTROPY_CLASS_NOTE = ("Класс энтропии lambda < Lambda < 2 проверяется численно; "
                      "предположение о регулярных минимальных конусах внешнее и не проверяется.")


@dataclass
class SweepTable:
    """Таблица эксперимента: строки упорядочены по параметру"""
    experiment: str
    n: int
    frame: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)
    passed: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment': self.experiment,
            'n': self.n,
            'passed': self.passed,
            'summary': self.summary,
            'rows': self.frame.to_dict(orient='records'),
        }


def _grid(config: RunConfig) -> RadialGrid:
    return make_radial_grid(config.grid.nodes, config.grid.r_max, config.grid.stretch)


def run_rows(func: Callable, rows: Sequence, jobs: int = 1) -> List:
    """Упорядоченное отображение строк; при jobs > 1 через пул процессов"""
    rows = list(rows)
    if jobs <= 1 or len(rows) <= 1:
        return [func(row) for row in rows]
    with ProcessPoolExecutor(max_workers=min(jobs, len(rows))) as pool:
        return list(pool.map(func, rows))


def _error_row(parameter: float, error: ExpanderLabError) -> Dict[str, Any]:
    logger.warning(f"Строка {parameter:.8g}: {error.kind}: {error}")
    return {'parameter': parameter, 'distance': float('nan'), 'distance_c0': float('nan'),
            'a': float('nan'), 'lambda': float('nan'), 'checks_passed': 0,
            'error_kind': error.kind, 'error': str(error)}


def _row(parameter: float, **values: Any) -> Dict[str, Any]:
    row = {'parameter': parameter, 'distance': float('nan'), 'distance_c0': float('nan'),
           'a': float('nan'), 'lambda': float('nan'), 'checks_passed': 0,
           'error_kind': '', 'error': ''}
    row.update(values)
    return row


def _table(experiment: str, n: int, rows: List[Dict[str, Any]], summary: Dict[str, Any],
           passed: bool) -> SweepTable:
    frame = pd.DataFrame(rows)
    extra = [name for name in frame.columns if name not in SWEEP_COLUMNS]
    frame = frame[SWEEP_COLUMNS + extra].sort_values('parameter', kind='stable').reset_index(drop=True)
    summary['passed'] = bool(passed)
    return SweepTable(experiment=experiment, n=n, frame=frame, summary=summary, passed=bool(passed))


# Компактность

def _compactness_row(tau: float, n: int, grid: RadialGrid, solver, limit_u: np.ndarray,
                     limit_du: np.ndarray, window: np.ndarray) -> Dict[str, Any]:
    try:
        result = shoot(n, tau, grid=grid, settings=solver)
    except ExpanderLabError as e:
        return _error_row(tau, e)
    p = result.profile
    c0 = float(np.max(np.abs(p.u[window] - limit_u[window])))
    c1 = c0 + float(np.max(np.abs(p.du[window] - limit_du[window])))
    return _row(tau, distance=c1, distance_c0=c0, a=result.a)


def compactness_sweep(n: int, tau_seq: Sequence[float], tau_limit: float, R_window: float,
                      config: Optional[RunConfig] = None, jobs: int = 1) -> SweepTable:
    """
    Расстояния C^0 и C^1 между профилями u_i (для tau_i) и предельным u на [0, R_window].
    Ошибки решателя записываются в строки и не прерывают эксперимент.
    """
    config = config or RunConfig(jobs=1)
    if not tau_limit > 0 or any(not t > 0 for t in tau_seq):
        raise InvalidParameterError("все tau должны быть > 0", {'tau_limit': tau_limit})
    grid = _grid(config)
    limit = shoot(n, tau_limit, grid=grid, settings=config.solver)
    window = grid.nodes <= R_window
    worker = partial(_compactness_row, n=n, grid=grid, solver=config.solver,
                     limit_u=np.array(limit.profile.u), limit_du=np.array(limit.profile.du), window=window)
    logger.info(f"Компактность: n={n}, {len(tau_seq)} значений tau -> {tau_limit}, окно {R_window}")
    rows = run_rows(worker, [float(t) for t in tau_seq], jobs)

    ok = [row for row in rows if not row['error_kind']]
    # порядок последовательности, а не сортировка по tau
    distances = np.array([row['distance'] for row in ok])
    gaps = np.array([abs(row['parameter'] - tau_limit) for row in ok])
    strictly = bool(distances.size > 1 and np.all(np.diff(distances) < 0.0))
    rate = float(np.dot(distances, gaps) / np.dot(gaps, gaps)) if np.any(gaps > 0) else 0.0
    limit_distance = _gap_limit(distances, gaps)
    summary = {
        'tau_limit': tau_limit,
        'a_limit': limit.a,
        'R_window': R_window,
        'strictly_decreasing': strictly,
        'final_distance': float(distances[-1]) if distances.size else float('nan'),
        'limit_distance': limit_distance,
        'threshold': COMPACTNESS_THRESHOLD,
        'rate_constant': rate,
        'failed_rows': len(rows) - len(ok),
    }
    passed = strictly and len(ok) == len(rows) and abs(limit_distance) < COMPACTNESS_THRESHOLD
    return _table('compactness', n, rows, summary, passed=passed)


def _gap_limit(distances: np.ndarray, gaps: np.ndarray) -> float:
    """Значение при |tau_i - tau| -> 0: квадратичная подгонка по трём последним точкам"""
    if distances.size < 3:
        return float(distances[-1]) if distances.size else float('nan')
    return float(np.polyfit(gaps[-3:], distances[-3:], 2)[-1])


# Собственность

def _axis_height(tau: float, n: int, grid: RadialGrid, solver) -> Dict[str, Any]:
    try:
        result = shoot(n, tau, grid=grid, settings=solver)
    except ExpanderLabError as e:
        return _error_row(tau, e)
    return _row(tau, a=result.a, distance_c0=float(np.max(np.abs(result.profile.du))))


def properness_probe(n: int, tau_interval: Sequence[float], samples: int,
                     config: Optional[RunConfig] = None, jobs: int = 1) -> SweepTable:
    """
    a(tau) на отрезке: ограниченность и модуль непрерывности |a(tau+h) - a(tau)|
    при делении h пополам; отдельно поведение при tau -> 0+.
    """
    config = config or RunConfig(jobs=1)
    lo, hi = float(tau_interval[0]), float(tau_interval[1])
    if not 0.0 < lo < hi:
        raise InvalidParameterError(f"нужен отрезок 0 < lo < hi, получено {tau_interval}")
    if samples < 2:
        raise InvalidParameterError("нужно хотя бы две точки")
    grid = _grid(config)
    worker = partial(_axis_height, n=n, grid=grid, solver=config.solver)

    taus = list(np.geomspace(lo, hi, samples))
    mid = math.sqrt(lo * hi)
    h0 = 0.1 * mid
    steps = [h0 / 2.0 ** k for k in range(4)]
    flat = [lo / 4.0, lo / 16.0]
    logger.info(f"Собственность: n={n}, tau in [{lo}, {hi}], {samples} точек")
    results = run_rows(worker, taus + [mid] + [mid + h for h in steps] + flat, jobs)
    rows = results[:samples]
    a_mid = results[samples]['a']
    moduli = [abs(row['a'] - a_mid) for row in results[samples + 1:samples + 1 + len(steps)]]
    flat_rows = results[samples + 1 + len(steps):]

    previous = None
    for row in rows:
        if not row['error_kind']:
            row['distance'] = 0.0 if previous is None else abs(row['a'] - previous)
            previous = row['a']
    heights = np.array([row['a'] for row in rows])
    bounded = bool(np.all(np.isfinite(heights)))
    ratios = [moduli[k + 1] / moduli[k] for k in range(len(moduli) - 1) if moduli[k] > 0]
    ratio_ok = bool(ratios) and all(0.3 <= q <= 0.7 for q in ratios)
    summary = {
        'tau_interval': [lo, hi],
        'a_min': float(np.nanmin(heights)) if bounded else float('nan'),
        'a_max': float(np.nanmax(heights)) if bounded else float('nan'),
        'bounded': bounded,
        'continuity_center': mid,
        'continuity_steps': steps,
        'continuity_moduli': moduli,
        'modulus_ratios': ratios,
        'flat_limit': [{'tau': row['parameter'], 'a': row['a']} for row in flat_rows],
    }
    return _table('properness', n, rows, summary, passed=bounded and ratio_ok)


# Поток против стрельбы

def _mcf_row(eps: float, n: int, tau: float, grid: RadialGrid, params: FlowParams,
             target: np.ndarray, inner: np.ndarray) -> Dict[str, Any]:
    try:
        state = evolve_radial_mcf(mollified_cone(tau, eps, grid), n, 1.0, params)
        difference = float(np.max(np.abs(state.profile.u[inner] - target[inner])))
        defect = self_similarity_defect(state.snapshot(0.5), state.snapshot(1.0))
    except ExpanderLabError as e:
        row = _error_row(eps, e)
        row['defect'] = float('nan')
        return row
    logger.info(f"eps={eps:g}: разность с экспандером {difference:.3e}, дефект {defect:.3e}")
    return _row(eps, distance=difference, defect=defect, steps=state.steps)


def _aitken(values: Sequence[float]) -> float:
    """Экстраполяция Эйткена по трём последним значениям"""
    if len(values) < 3:
        return float(values[-1])
    x0, x1, x2 = values[-3:]
    denominator = x2 - 2.0 * x1 + x0
    if denominator == 0.0 or not math.isfinite(denominator):
        return float(x2)
    limit = x2 - (x2 - x1) ** 2 / denominator
    return float(limit) if 0.0 <= limit <= x2 else float(x2)


def mcf_vs_shooting(n: int, tau: float, eps_list: Sequence[float],
                    config: Optional[RunConfig] = None, jobs: int = 1) -> SweepTable:
    """Поток из сглаженного конуса к t = 1 против решения стрельбой на [0, r_max/2]"""
    config = config or RunConfig(jobs=1)
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidParameterError("eps_list должен убывать", {'eps_list': eps_list})
    grid = _grid(config)
    expander = shoot(n, tau, grid=grid, settings=config.solver)
    params = FlowParams.from_settings(config.flow)
    params.snapshot_times = [0.5, 1.0]
    inner = grid.nodes <= grid.r_max / 2.0
    worker = partial(_mcf_row, n=n, tau=tau, grid=grid, params=params,
                     target=np.array(expander.profile.u), inner=inner)
    rows = run_rows(worker, eps_list, jobs)

    ok = [row for row in rows if not row['error_kind']]
    differences = [row['distance'] for row in ok]
    monotone = len(differences) > 1 and all(b < a for a, b in zip(differences, differences[1:]))
    extrapolated = _aitken(differences) if differences else float('nan')
    defect = float(ok[-1]['defect']) if ok else float('nan')
    summary = {
        'tau': tau,
        'a': expander.a,
        'monotone': monotone,
        'extrapolated_difference': extrapolated,
        'self_similarity_defect': defect,
        'threshold': MCF_THRESHOLD,
    }
    passed = (monotone and len(ok) == len(rows) and extrapolated < MCF_THRESHOLD
              and defect < MCF_THRESHOLD)
    return _table('mcf_vs_shooting', n, rows, summary, passed)


# Энтропия

def continuity_sweep(n: int, tau_limit: float, count: int,
                     config: Optional[RunConfig] = None) -> SweepTable:
    """tau_i = tau + 2^{-i}: разности энтропий конусов должны убывать"""
    config = config or RunConfig(jobs=1)
    taus = [tau_limit + 2.0 ** -i for i in range(1, count + 1)]
    frame = entropy_continuity_experiment(n, taus, tau_limit, config.entropy, config.seed)
    rows = [_row(float(rec['tau']), distance=float(rec['difference']), **{'lambda': float(rec['lambda'])},
                 quad_error=float(rec['quad_error']))
            for rec in frame.to_dict(orient='records')]
    differences = [row['distance'] for row in rows]
    monotone = all(b <= a for a, b in zip(differences, differences[1:]))
    summary = {'tau_limit': tau_limit, 'monotone': monotone, 'final_difference': differences[-1]}
    return _table('continuity', n, rows, summary, passed=monotone and differences[-1] < 1e-3)


def cone_entropy_table(n: int, taus: Sequence[float], config: Optional[RunConfig] = None) -> SweepTable:
    config = config or RunConfig(jobs=1)
    frame = entropy_sweep(n, taus, config.entropy, config.seed)
    rows = [_row(float(rec['tau']), **{'lambda': float(rec['lambda'])}, quad_error=float(rec['quad_error']))
            for rec in frame.to_dict(orient='records')]
    below_two = all(row['lambda'] < 2.0 for row in rows)
    return _table('entropy', n, rows, {'lambda_below_two': below_two}, passed=below_two)


# Проверки

def _guarded(name: str, check: Callable[[], CheckReport]) -> CheckReport:
    try:
        return check()
    except HypothesisViolationError as e:
        logger.info(f"Проверка {name}: нарушено предположение ({e})")
        return CheckReport.not_applicable(name, e)


def entropy_identity_check(result: ShootingResult, n: int, config: RunConfig) -> CheckReport:
    """lambda экспандера против lambda его асимптотического конуса"""
    p = result.profile
    expander_report = entropy_of_profile(p, n, config.entropy, config.seed)
    cone_report = cone_entropy(ConeSpec(n, result.tau), config.entropy, config.seed)
    lam_cone = cone_report.lam
    difference = abs(expander_report.lam - lam_cone) / lam_cone
    return CheckReport(name='entropy_identity', sup_residual=difference,
                       tolerance=config.entropy.identity_tolerance, method='quadrature',
                       notes='|lambda[Sigma] - lambda[C]|/lambda[C]',
                       details={'lambda_expander': expander_report.to_dict(),
                                'lambda_cone': cone_report.to_dict()})


def verification_battery(result: ShootingResult, n: int,
                         config: Optional[RunConfig] = None,
                         include_entropy: bool = True) -> List[CheckReport]:
    """Все проверки для решённого профиля; нарушенные предположения не считаются провалом"""
    config = config or RunConfig(jobs=1)
    p = result.profile
    analysis = config.analysis
    cone = ConeSpec(n, result.tau)
    reports = [
        _guarded('mean_convexity', lambda: mean_convexity_check(p, n)),
        cauchy_schwarz_check(curvatures(p, n), n),
        H_identity_check(p, n, analysis),
        _guarded('curvature_ratio_bound', lambda: curvature_ratio_bound(p, cone, n, analysis)),
        drift_H_residual(p, n, analysis),
        _guarded('ratio_subsolution', lambda: ratio_subsolution_check(p, n, analysis)),
    ]
    if cone.is_flat:
        reports.append(CheckReport.not_applicable(
            'decay', HypothesisViolationError("плоский конус: затухание тождественно нулевое")))
    else:
        reports.append(decay_check(p, cone, n, result.a, analysis, config.solver))

    if include_entropy:
        identity = entropy_identity_check(result, n, config)
        reports.append(identity)
        lam = identity.details['lambda_cone']['lambda']
        reports.append(area_ratio_check(p, n, lam, count=analysis.area_radii))
    passed = sum(1 for r in reports if r.passed)
    logger.info(f"Батарея проверок: {passed}/{len(reports)} пройдено")
    return reports


def battery_passed(reports: Sequence[CheckReport]) -> bool:
    return all(r.passed for r in reports if r.applicable)


def residual_refinement_study(n: int, tau: float, nodes_list: Sequence[int] = (512, 1024, 2048),
                              config: Optional[RunConfig] = None, jobs: int = 1) -> SweepTable:
    """
    Невязки решения и тождеств при удвоении сетки. Порядки считаются для невязки
    уравнения и разностного варианта L H = -H; невязки по рядам от сетки
    не зависят и должны оставаться в допуске на каждой сетке.
    """
    config = config or RunConfig(jobs=1)
    rows = run_rows(partial(_refinement_row, n=n, tau=tau, config=config), list(nodes_list), jobs)
    ok = [row for row in rows if not row['error_kind']]
    orders = {}
    if len(ok) >= 2:
        nodes = [row['parameter'] for row in ok]
        for key in ('distance', 'drift_residual_fd'):
            values = [row[key] for row in ok]
            if all(v > 0 for v in values):
                orders[key] = refinement_order(values, nodes)
    analysis = config.analysis
    within = all(row['drift_residual'] <= analysis.drift_tolerance
                 and row['subsolution_residual'] <= analysis.subsolution_tolerance for row in ok)
    worst = max((row['subsolution_residual'] for row in ok), default=float('nan'))
    summary = {'tau': tau, 'orders': orders, 'identities_within_tolerance': within,
               'max_subsolution_residual': worst}
    passed = (len(ok) == len(rows) and within and orders.get('distance', 0.0) >= 1.8
              and orders.get('drift_residual_fd', 0.0) >= 1.0)
    return _table('refinement', n, rows, summary, passed)


def _refinement_row(nodes: int, n: int, tau: float, config: RunConfig) -> Dict[str, Any]:
    grid = make_radial_grid(nodes, config.grid.r_max, config.grid.stretch)
    try:
        result = shoot(n, tau, grid=grid, settings=config.solver)
    except ExpanderLabError as e:
        return _error_row(float(nodes), e)
    p = result.profile
    residual, nonfinite = residual_summary(p, n)
    drift = drift_H_residual(p, n, config.analysis).sup_residual
    drift_fd = drift_H_residual(p, n, config.analysis, method='finite-difference').sup_residual
    subsolution = _guarded('ratio_subsolution', lambda: ratio_subsolution_check(p, n, config.analysis))
    return _row(float(nodes), distance=residual, a=result.a, drift_residual=drift,
                drift_residual_fd=drift_fd, subsolution_residual=subsolution.sup_residual,
                nonfinite_nodes=nonfinite)


# Конвейер существования

def existence_pipeline(n: int, theta0: float, t_cut: float,
                       config: Optional[RunConfig] = None,
                       include_entropy: bool = True) -> Dict[str, Any]:
    """
    Звено-геодезическая сфера -> поток звена до t_cut -> конус -> экспандер -> проверки.
    Ошибка любого этапа поднимается как StageError с меткой этапа.
    """
    config = config or RunConfig(jobs=1)
    if not 0.0 < theta0 <= math.pi / 2.0:
        raise InvalidParameterError(f"theta0 должен лежать в (0, pi/2], получено {theta0}",
                                    {'theta0': theta0})
    dossier: Dict[str, Any] = {'n': n, 'theta0': theta0, 't_cut': t_cut, 'stages': [],
                               'checks': [], 'assumption_note': ENTROPY_CLASS_NOTE}

    if math.isclose(theta0, math.pi / 2.0, rel_tol=0.0, abs_tol=1e-15):
        logger.info("theta0 = pi/2: экваториальное звено, конус - гиперплоскость")
        dossier.update({'tau': 0.0, 'lambda': 1.0, 'degenerate': 'flat', 'passed': True})
        dossier['stages'].append({'stage': 'link_flow', 'status': 'skipped', 'reason': 'flat'})
        return dossier

    T = extinction_time(n, theta0)
    try:
        link = link_sphere_flow(n, theta0, t_cut)
        times = np.linspace(0.0, t_cut, 33)
        margins = []
        convex = True
        for t in times:
            state = link_sphere_flow(n, theta0, float(t))
            margins.append(pinching_check(state)[1])
            convex = convex and link_mean_convex(state)
    except ExpanderLabError as e:
        raise StageError('link_flow', e) from e
    pinched = all(m > 0 for m in margins)
    dossier['stages'].append({'stage': 'link_flow', 'status': 'ok', 'extinction_time': T,
                              'theta_cut': link.theta, 'min_pinching_margin': min(margins),
                              'pinching_preserved': pinched, 'mean_convex': convex})

    try:
        cone = link.to_cone()
    except ExpanderLabError as e:
        raise StageError('cone', e) from e
    dossier['tau'] = cone.tau
    dossier['stages'].append({'stage': 'cone', 'status': 'ok', 'tau': cone.tau})

    try:
        result = shoot(n, cone.tau, grid=_grid(config), settings=config.solver)
    except ExpanderLabError as e:
        raise StageError('shoot', e) from e
    dossier['stages'].append({'stage': 'shoot', 'status': 'ok', **result.to_report()})

    try:
        reports = verification_battery(result, n, config, include_entropy=include_entropy)
    except ExpanderLabError as e:
        raise StageError('checks', e) from e
    dossier['checks'] = [r.to_dict() for r in reports]
    identity = next((r for r in reports if r.name == 'entropy_identity'), None)
    dossier['lambda'] = (identity.details['lambda_cone']['lambda'] if identity is not None
                         else float('nan'))
    dossier['passed'] = bool(pinched and convex and battery_passed(reports))
    logger.info(f"Конвейер: tau={cone.tau:.6f}, a={result.a:.6f}, итог {'OK' if dossier['passed'] else 'FAIL'}")
    return dossier


def run_experiment(config: RunConfig) -> SweepTable:
    """Запуск эксперимента, названного в config.experiments.experiment"""
    settings = config.experiments
    n = config.n
    name = settings.experiment
    jobs = config.jobs
    if name == 'compactness':
        taus = [settings.tau_limit + 2.0 ** -i for i in range(1, settings.tau_count + 1)]
        return compactness_sweep(n, taus, settings.tau_limit, settings.r_window, config, jobs)
    if name == 'properness':
        return properness_probe(n, settings.tau_interval, settings.samples, config, jobs)
    if name == 'mcf_vs_shooting':
        return mcf_vs_shooting(n, config.tau, settings.eps_list, config, jobs)
    if name == 'continuity':
        return continuity_sweep(n, settings.tau_limit, settings.tau_count, config)
    if name == 'entropy':
        taus = list(np.linspace(*settings.tau_interval, settings.samples))
        return cone_entropy_table(n, taus, config)
    if name == 'refinement':
        return residual_refinement_study(n, config.tau, config=config, jobs=jobs)
    raise InvalidParameterError(f"неизвестный эксперимент '{name}'",
                                {'experiment': name,
                                 'known': ['compactness', 'properness', 'mcf_vs_shooting',
                                           'continuity', 'entropy', 'refinement']})
