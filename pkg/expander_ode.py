# -*- coding: utf-8 -*-
"""
Радиальное уравнение самоэкспандера и метод стрельбы.

Профиль u(r) удовлетворяет
    u''/(1+u'^2) + (n-1) u'/r - (u - r u')/2 = 0,   u(0) = a, u'(0) = 0,
а параметр a подбирается так, чтобы асимптотический наклон равнялся tau.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize
from scipy.integrate import solve_ivp

from core import (ConeSpec, Profile, RadialGrid, estimate_trace, make_radial_grid,
                  second_derivative, series_derivative, series_div, series_mul)
from errors import (BlowUpError, BracketError, InvalidParameterError, StepUnderflowError,
                    ToleranceNotMetError, TraceMismatchError)
from settings import GridSettings, SolverSettings

logger = logging.getLogger(__name__)


@dataclass
class ShootingResult:
    """Результат стрельбы по высоте на оси"""
    profile: Profile
    a: float
    residual_sup: float
    slope_error: float
    iterations: int
    n: int = 2
    tau: float = 0.0
    decay_M: float = float('nan')
    scan_table: List[Dict[str, float]] = field(default_factory=list)

    def to_report(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'tau': self.tau,
            'a': self.a,
            'residual_sup': self.residual_sup,
            'slope_error': self.slope_error,
            'decay_M': self.decay_M,
            'iterations': self.iterations,
            'grid': self.profile.grid.describe(),
        }


def _check_dimension(n: int):
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"n должно быть целым >= 2, получено {n}", {'n': n})


def expander_second_derivative(r: np.ndarray, u: np.ndarray, du: np.ndarray, n: int) -> np.ndarray:
    """u'' из уравнения экспандера; на оси u''(0) = u(0)/(2n)"""
    d2 = np.empty_like(u)
    d2[0] = u[0] / (2.0 * n)
    rr = r[1:]
    d2[1:] = (1.0 + du[1:] ** 2) * ((u[1:] - rr * du[1:]) / 2.0 - (n - 1) * du[1:] / rr)
    return d2


NEAR_AXIS = 0.05
AXIS_ORDER = 12


@dataclass(frozen=True, eq=False)
class ExpanderJet:
    """
    Локальные ряды Тейлора в узлах: coefficients[k] = u^{(k)}(r_i)/k!,
    slope_over_r[k] - коэффициенты ряда u'/r до порядка order - 2.
    """
    r: np.ndarray
    coefficients: np.ndarray
    slope_over_r: np.ndarray

    @property
    def order(self) -> int:
        return self.coefficients.shape[0] - 1


def _jet_recursion(r: np.ndarray, u: np.ndarray, du: np.ndarray, n: int, order: int) -> np.ndarray:
    """
    Рекурсия по уравнению, записанному как u''/W^2 = (u - r u')/2 - (n-1) u'/r.
    На оси член u'/r - сдвиг ряда u', и старший коэффициент находится неявно.
    """
    m = r.size
    c = np.zeros((order + 1, m))
    c[0] = u
    c[1] = du
    axis = r == 0.0
    c[1, axis] = 0.0
    off = ~axis
    k_col = np.arange(order + 1, dtype=float)[:, None]
    inv_r = np.zeros((order + 1, m))
    inv_r[:, off] = (-1.0) ** k_col / r[off] ** (k_col + 1.0)
    g = np.zeros((max(order - 1, 1), m))
    for k in range(order - 1):
        p = (k_col[:k + 1] + 1.0) * c[1:k + 2]
        w2 = series_mul(p, p)
        w2[0] += 1.0
        rp = r * p[k] + (p[k - 1] if k else 0.0)
        q = np.sum(p * inv_r[k::-1], axis=0)
        g[k] = (c[k] - rp) / 2.0 - (n - 1) * q
        known = np.sum(w2 * g[k::-1], axis=0)
        c[k + 2] = known / ((k + 1) * (k + 2))
        c[k + 2, axis] = known[axis] / ((k + 2) * (k + n))
        g[k, axis] -= (n - 1) * (k + 2) * c[k + 2, axis]
    return c


def _shifted(coefficients: np.ndarray, points: np.ndarray, order: int) -> np.ndarray:
    """Коэффициенты многочлена из степеней r, переразложенные в точках"""
    out = np.zeros((order + 1, points.size))
    derivative = coefficients
    for k in range(order + 1):
        out[k] = P.polyval(points, derivative) / math.factorial(k)
        derivative = P.polyder(derivative)
    return out


def expander_jet(r: np.ndarray, u: np.ndarray, du: np.ndarray, n: int, order: int = 4) -> ExpanderJet:
    """
    Ряды Тейлора до порядка order локального решения уравнения через (r_i, u_i, u'_i).
    Производные получаются из уравнения, а не разностями. В узлах 0 < r < NEAR_AXIS
    ряд переразлагается из многочлена на оси с высотой u[0] (требуется r[0] = 0).
    """
    _check_dimension(n)
    if order < 3:
        raise InvalidParameterError(f"порядок ряда должен быть >= 3, получено {order}", {'order': order})
    r = np.asarray(r, dtype=float)
    c = _jet_recursion(r, np.asarray(u, dtype=float), np.asarray(du, dtype=float), n, order)
    axis = r == 0.0
    slope = series_derivative(c)
    over_r = np.zeros((order - 1, r.size))
    regular = ~axis
    r_series = np.zeros((order - 1, int(np.count_nonzero(regular))))
    r_series[0] = r[regular]
    r_series[1] = 1.0
    over_r[:, regular] = series_div(slope[:order - 1, regular], r_series)
    over_r[:, axis] = slope[1:, axis]

    near = regular & (r < NEAR_AXIS)
    if np.any(near) and r[0] == 0.0:
        axis_poly = _jet_recursion(np.zeros(1), np.array([u[0]]), np.zeros(1), n, AXIS_ORDER)[:, 0]
        slope_poly = P.polyder(axis_poly)
        c[:, near] = _shifted(axis_poly, r[near], order)
        # u'/r = sum m b_m r^{m-2}; нечётных членов нет
        over_r[:, near] = _shifted(slope_poly[1:], r[near], order - 2)
    return ExpanderJet(r=r, coefficients=c, slope_over_r=over_r)


def expander_residual(p: Profile, n: int) -> np.ndarray:
    """
    Невязка R(r) = u''/(1+u'^2) + (n-1)u'/r - (u - r u')/2 в каждом узле.
    На оси используется предел n u''(0) - u(0)/2. u'' берётся разностями.
    """
    _check_dimension(n)
    r, u, du = p.r, p.u, p.du
    d2 = second_derivative(p)
    residual = np.empty_like(u)
    residual[0] = n * d2[0] - u[0] / 2.0
    rr = r[1:]
    residual[1:] = (d2[1:] / (1.0 + du[1:] ** 2) + (n - 1) * du[1:] / rr
                    - (u[1:] - rr * du[1:]) / 2.0)
    if not np.all(np.isfinite(residual)):
        logger.warning("Невязка экспандера содержит нечисловые значения")
    return residual


def residual_summary(p: Profile, n: int) -> Tuple[float, int]:
    """
    (sup |R|, число нечисловых узлов). При нечисловых узлах sup = inf,
    чтобы сравнение с допуском не проходило молча.
    """
    residual = expander_residual(p, n)
    bad = int(np.count_nonzero(~np.isfinite(residual)))
    if bad:
        return float('inf'), bad
    return float(np.max(np.abs(residual))), 0


def _rhs(n: int):
    def rhs(r, y):
        u, v = y
        return [v, (1.0 + v * v) * ((u - r * v) / 2.0 - (n - 1) * v / r)]
    return rhs


def _series_start(n: int, a: float, radius: float) -> Tuple[float, float]:
    return a + a * radius ** 2 / (4.0 * n), a * radius / (2.0 * n)


@dataclass
class _Trajectory:
    solution: Any
    r_ser: float
    status: str
    r_stop: float


def _integrate(n: int, a: float, r_max: float, tol: float, slope_cap: float,
               stop_slope: Optional[float], settings: SolverSettings) -> _Trajectory:
    """Интегрирование от оси с остановкой по пределу наклона"""
    r_ser = settings.series_radius * min(1.0, 1.0 / a)
    y0 = list(_series_start(n, a, r_ser))

    def cap_event(r, y):
        return abs(y[1]) - slope_cap
    cap_event.terminal = True

    events = [cap_event]
    if stop_slope is not None:
        def stop_event(r, y):
            return y[1] - stop_slope
        stop_event.terminal = True
        stop_event.direction = 1
        events.append(stop_event)

    sol = solve_ivp(_rhs(n), (r_ser, r_max), y0, method='DOP853', rtol=tol, atol=tol,
                    dense_output=True, events=events)

    if sol.status == -1:
        return _Trajectory(sol, r_ser, 'step-underflow', float(sol.t[-1]))
    if sol.status == 1:
        if sol.t_events[0].size:
            return _Trajectory(sol, r_ser, 'blow-up', float(sol.t_events[0][0]))
        return _Trajectory(sol, r_ser, 'overshoot', float(sol.t_events[1][0]))
    return _Trajectory(sol, r_ser, 'ok', r_max)


def _sample(trajectory: _Trajectory, n: int, a: float, nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    u = np.empty_like(nodes)
    du = np.empty_like(nodes)
    near = nodes < trajectory.r_ser
    u[near], du[near] = _series_start(n, a, nodes[near])
    values = trajectory.solution.sol(nodes[~near])
    u[~near], du[~near] = values[0], values[1]
    du[0] = 0.0
    return u, du


def integrate_profile(n: int, a: float, r_max: float, tol: float,
                      grid: Optional[RadialGrid] = None,
                      slope_cap: Optional[float] = None,
                      settings: Optional[SolverSettings] = None) -> Profile:
    """
    Профиль экспандера с высотой a на оси.

    Ряд u = a + a r^2/(4n) на [0, r_ser], далее DOP853 с плотным выводом;
    значения берутся в узлах сетки.
    """
    _check_dimension(n)
    settings = settings or SolverSettings()
    if not a > 0:
        raise InvalidParameterError(f"высота на оси должна быть > 0, получено {a}", {'a': a})
    if not r_max > 0 or not tol > 0:
        raise InvalidParameterError("r_max и tol должны быть > 0", {'r_max': r_max, 'tol': tol})
    if grid is None:
        grid_settings = GridSettings()
        grid = make_radial_grid(grid_settings.nodes, r_max, grid_settings.stretch)
    elif not math.isclose(grid.r_max, r_max, rel_tol=1e-12):
        raise InvalidParameterError("r_max не совпадает с внешним радиусом сетки",
                                    {'r_max': r_max, 'grid_r_max': grid.r_max})
    cap = settings.slope_cap if slope_cap is None else slope_cap

    trajectory = _integrate(n, a, grid.r_max, tol, cap, None, settings)
    if trajectory.status == 'step-underflow':
        raise StepUnderflowError(f"шаг интегратора исчез при r = {trajectory.r_stop:.6g}",
                                 {'a': a, 'r': trajectory.r_stop, 'message': trajectory.solution.message})
    if trajectory.status == 'blow-up':
        raise BlowUpError(f"|u'| превысил {cap:g} при r = {trajectory.r_stop:.6g}",
                          {'a': a, 'r': trajectory.r_stop, 'slope_cap': cap})

    u, du = _sample(trajectory, n, a, grid.nodes)
    monotone = bool(np.all(du >= 0.0))
    if not monotone:
        logger.warning(f"Профиль с a={a:.6g} немонотонен: min u' = {du.min():.3e}")
    meta = {'kind': 'expander', 'n': n, 'a': a, 'tol': tol, 'monotone': monotone,
            'steps': int(trajectory.solution.t.size)}
    return Profile(grid, u, du, meta)


def slope_map(n: int, a: float, grid: RadialGrid, tol: float,
              stop_slope: Optional[float] = None,
              settings: Optional[SolverSettings] = None) -> float:
    """Асимптотический наклон траектории с высотой a; перелёт и срыв дают inf"""
    settings = settings or SolverSettings()
    trajectory = _integrate(n, a, grid.r_max, tol, settings.slope_cap, stop_slope, settings)
    if trajectory.status in ('blow-up', 'overshoot'):
        return math.inf
    if trajectory.status == 'step-underflow':
        raise StepUnderflowError(f"шаг интегратора исчез при r = {trajectory.r_stop:.6g}", {'a': a})
    u, du = _sample(trajectory, n, a, grid.nodes)
    return estimate_trace(Profile(grid, u, du)).value


def _objective(slope: float, tau: float) -> float:
    return math.atan(slope) - math.atan(tau)


def _scan(n: int, tau: float, factors: List[float], grid: RadialGrid,
          settings: SolverSettings) -> Tuple[List[Dict[str, float]], Tuple[float, float]]:
    """Сканирование a = factor*tau*sqrt(n); ровно одна смена знака"""
    stop = settings.overshoot_factor * tau + 1.0
    table = []
    for factor in factors:
        a = factor * tau * math.sqrt(n)
        slope = slope_map(n, a, grid, settings.scan_tol, stop, settings)
        table.append({'a': a, 'slope': slope, 'objective': _objective(slope, tau)})
    logger.debug(f"Сканирование (n={n}, tau={tau}): {len(table)} точек")

    changes = [i for i in range(len(table) - 1)
               if (table[i]['objective'] < 0.0) != (table[i + 1]['objective'] < 0.0)]
    if not changes:
        raise BracketError(f"нет смены знака на сканируемом диапазоне a для tau={tau}", table)
    if len(changes) > 1:
        raise BracketError(f"найдено {len(changes)} смен знака для tau={tau}", table)
    i = changes[0]
    return table, (table[i]['a'], table[i + 1]['a'])


def _refine(n: int, tau: float, bracket: Tuple[float, float], grid: RadialGrid, tol: float,
            settings: SolverSettings, table: List[Dict[str, float]]) -> Tuple[float, int]:
    stop = settings.overshoot_factor * tau + 1.0

    def objective(a):
        return _objective(slope_map(n, a, grid, tol, stop, settings), tau)

    try:
        root, info = optimize.brentq(objective, bracket[0], bracket[1], xtol=settings.root_xtol,
                                     maxiter=200, full_output=True, disp=False)
    except ValueError as e:
        raise BracketError(f"уточнение корня не удалось: {e}", table) from e
    if not info.converged:
        raise ToleranceNotMetError(f"brentq не сошёлся: {info.flag}",
                                   {'bracket': list(bracket), 'iterations': info.iterations})
    return float(root), int(info.iterations)


def _plane(n: int, grid: RadialGrid) -> ShootingResult:
    zeros = np.zeros_like(grid.nodes)
    profile = Profile(grid, zeros, zeros, {'kind': 'expander', 'n': n, 'a': 0.0, 'tol': 0.0})
    return ShootingResult(profile=profile, a=0.0, residual_sup=0.0, slope_error=0.0,
                          iterations=0, n=n, tau=0.0, decay_M=0.0)


def _default_grid() -> RadialGrid:
    grid_settings = GridSettings()
    return make_radial_grid(grid_settings.nodes, grid_settings.r_max, grid_settings.stretch)


def shoot(n: int, tau: float, tol: Optional[float] = None,
          grid: Optional[RadialGrid] = None,
          settings: Optional[SolverSettings] = None) -> ShootingResult:
    """
    Экспандер, асимптотический конусу наклона tau.

    Грубое сканирование по a, затем brentq (бисекция с секущими шагами).
    При tau = 0 возвращается плоскость без интегрирования.
    """
    _check_dimension(n)
    settings = settings or SolverSettings()
    tol = settings.tol if tol is None else tol
    grid = grid or _default_grid()
    if not math.isfinite(tau) or tau < 0:
        raise InvalidParameterError(f"tau должно быть >= 0, получено {tau}", {'tau': tau})
    if tau == 0.0:
        logger.info("tau = 0: возвращается плоскость")
        return _plane(n, grid)

    logger.info(f"Стрельба: n={n}, tau={tau}, N={grid.N}, r_max={grid.r_max}")
    table, bracket = _scan(n, tau, settings.scan_factors, grid, settings)
    a, iterations = _refine(n, tau, bracket, grid, tol, settings, table)
    profile = integrate_profile(n, a, grid.r_max, tol, grid=grid, settings=settings)

    slope_error = abs(estimate_trace(profile).value - tau)
    residual_sup, nonfinite = residual_summary(profile, n)
    logger.info(f"a = {a:.12g}, ошибка наклона {slope_error:.2e}, невязка {residual_sup:.2e}, "
                f"итераций {iterations}")

    if slope_error > max(settings.slope_tolerance, 10.0 * tol):
        raise ToleranceNotMetError(f"ошибка наклона {slope_error:.3e} превышает допуск",
                                   {'slope_error': slope_error, 'a': a})
    if nonfinite:
        raise ToleranceNotMetError(f"невязка не определена в {nonfinite} узлах",
                                   {'nonfinite_nodes': nonfinite, 'a': a})
    if residual_sup > settings.residual_tolerance:
        raise ToleranceNotMetError(f"невязка {residual_sup:.3e} превышает допуск "
                                   f"{settings.residual_tolerance:.1e}",
                                   {'residual_sup': residual_sup, 'a': a})

    try:
        decay_M = decay_constant(profile, ConeSpec(n, tau), settings.trace_tolerance)
    except TraceMismatchError as e:
        logger.warning(f"Константа затухания не вычислена: {e}")
        decay_M = float('nan')

    return ShootingResult(profile=profile, a=a, residual_sup=residual_sup, slope_error=slope_error,
                          iterations=iterations, n=n, tau=tau, decay_M=decay_M, scan_table=table)


def uniqueness_probe(n: int, tau: float, tol: Optional[float] = None,
                     grid: Optional[RadialGrid] = None,
                     settings: Optional[SolverSettings] = None) -> Tuple[float, float]:
    """Два независимых сканирования (грубое и мелкое) должны дать один корень"""
    _check_dimension(n)
    settings = settings or SolverSettings()
    tol = settings.tol if tol is None else tol
    grid = grid or _default_grid()
    if not tau > 0:
        raise InvalidParameterError(f"tau должно быть > 0, получено {tau}", {'tau': tau})

    coarse = settings.scan_factors
    fine = list(np.geomspace(min(coarse), max(coarse), settings.fine_scan_points))
    roots = []
    for factors in (coarse, fine):
        table, bracket = _scan(n, tau, factors, grid, settings)
        roots.append(_refine(n, tau, bracket, grid, tol, settings, table)[0])
    logger.info(f"Проверка единственности: a_грубое={roots[0]:.12g}, a_мелкое={roots[1]:.12g}")
    return roots[0], roots[1]


def decay_constant(p: Profile, cone: ConeSpec, tolerance: Optional[float] = None) -> float:
    """
    M = max по хвосту (r >= r_max/2) величины |x| (|f| + |f'|),
    где f = (u - tau r)/sqrt(1+tau^2) - нормальное отклонение от конуса.
    """
    tolerance = SolverSettings().trace_tolerance if tolerance is None else tolerance
    tau = cone.tau
    trace = estimate_trace(p).value
    if abs(trace - tau) > tolerance:
        raise TraceMismatchError(f"след профиля {trace:.6g} не совпадает с tau={tau:.6g}",
                                 {'trace': trace, 'tau': tau})
    r, u, du = p.r, p.u, p.du
    tail = r >= r[-1] / 2.0
    f = (u[tail] - tau * r[tail]) / math.sqrt(1.0 + tau ** 2)
    df = (du[tail] - tau) / (1.0 + tau ** 2)
    return float(np.max(np.hypot(r[tail], u[tail]) * (np.abs(f) + np.abs(df))))
