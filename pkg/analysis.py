# -*- coding: utf-8 -*-
"""
Кривизны радиальных графиков и проверки принципа максимума:
оценка |A|^2/H^2, тождество L H = -H, субрешение для |A|^2/H^2,
окна-графики и затухание к конусу. Каждая проверка возвращает CheckReport.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import ndimage

from core import (ConeSpec, Profile, make_radial_grid, second_derivative, series_derivative,
                  series_div, series_mul, series_sqrt)
from errors import HypothesisViolationError, InvalidParameterError, WindowEscapesGridError
from expander_ode import (decay_constant, expander_jet, expander_second_derivative,
                          integrate_profile)
from flow import LinkState
from settings import AnalysisSettings, SolverSettings

logger = logging.getLogger(__name__)

CURVATURE_COLUMNS = ['r', 'W', 'kappa_m', 'kappa_p', 'H', 'A2', 'ratio']


@dataclass
class CheckReport:
    """Итог одной проверки"""
    name: str
    sup_residual: float
    tolerance: float
    order_estimate: float = float('nan')
    method: str = ''
    notes: str = ''
    details: Dict[str, Any] = field(default_factory=dict)
    applicable: bool = True

    @property
    def passed(self) -> bool:
        # NaN не проходит
        return bool(self.sup_residual <= self.tolerance)

    @property
    def status(self) -> str:
        if not self.applicable:
            return 'hypothesis-violation'
        return 'pass' if self.passed else 'fail'

    @classmethod
    def not_applicable(cls, name: str, error: Exception) -> 'CheckReport':
        return cls(name=name, sup_residual=float('nan'), tolerance=float('nan'),
                   notes=str(error), details=getattr(error, 'details', {}), applicable=False)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['pass'] = self.passed
        data['status'] = self.status
        return data


@dataclass(frozen=True, eq=False)
class SurfaceSample:
    """Геометрия поверхности вращения в узлах профиля"""
    r: np.ndarray
    u: np.ndarray
    W: np.ndarray
    kappa_m: np.ndarray
    kappa_p: np.ndarray
    n: int
    method: str

    @property
    def H(self) -> np.ndarray:
        return self.kappa_m + (self.n - 1) * self.kappa_p

    @property
    def A2(self) -> np.ndarray:
        return self.kappa_m ** 2 + (self.n - 1) * self.kappa_p ** 2

    @property
    def position_norm(self) -> np.ndarray:
        return np.hypot(self.r, self.u)

    def umbilic(self, tolerance: float = 1e-9) -> np.ndarray:
        """A2 = H^2/n ровно там, где kappa_m = kappa_p"""
        scale = np.abs(self.kappa_m) + np.abs(self.kappa_p) + 1.0
        return np.abs(self.kappa_m - self.kappa_p) <= tolerance * scale


def _second_derivative_for(p: Profile, n: int):
    kind = p.kind
    if kind == 'expander' and p.meta.get('n', n) == n:
        return expander_second_derivative(p.r, p.u, p.du, n), 'expander-ode'
    if kind == 'cone':
        return np.zeros_like(p.u), 'cone-exact'
    return second_derivative(p), 'finite-difference'


def curvatures(p: Profile, n: int, method: Optional[str] = None) -> SurfaceSample:
    """
    Главные кривизны графика вращения относительно нормали, направленной вверх.

    u'' подставляется из уравнения экспандера для решённых профилей,
    для конусов равно нулю, иначе берётся разностями (method='finite-difference'
    принудительно включает разности).
    """
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"n должно быть целым >= 2, получено {n}")
    if method == 'finite-difference':
        d2 = second_derivative(p)
    else:
        d2, method = _second_derivative_for(p, n)
    r, du = p.r, p.du
    W = np.sqrt(1.0 + du ** 2)
    kappa_m = d2 / W ** 3
    kappa_p = np.empty_like(kappa_m)
    kappa_p[0] = kappa_m[0]
    kappa_p[1:] = du[1:] / (r[1:] * W[1:])
    return SurfaceSample(r=np.array(r), u=np.array(p.u), W=W, kappa_m=kappa_m, kappa_p=kappa_p,
                         n=n, method=method)


def _ratio(sample: SurfaceSample) -> np.ndarray:
    H = sample.H
    out = np.full_like(H, np.nan)
    np.divide(sample.A2, H ** 2, out=out, where=H != 0.0)
    return out


def curvature_table(sample: SurfaceSample) -> pd.DataFrame:
    """Поузловая таблица r,W,kappa_m,kappa_p,H,A2,ratio"""
    return pd.DataFrame({'r': sample.r, 'W': sample.W, 'kappa_m': sample.kappa_m,
                         'kappa_p': sample.kappa_p, 'H': sample.H, 'A2': sample.A2,
                         'ratio': _ratio(sample)}, columns=CURVATURE_COLUMNS)


def link_ratio(cone: ConeSpec) -> float:
    """sup |A_L|^2/H_L^2 по звену конуса; для круглого звена 1/(n-1)"""
    if cone.is_flat:
        raise HypothesisViolationError("звено плоского конуса не строго выпукло в среднем (H = 0)",
                                       {'tau': cone.tau})
    link = LinkState(cone.n, cone.link_angle)
    return link.A2 / link.H ** 2


def _examined(p: Profile) -> slice:
    return slice(1, None) if p.meta.get('singular_axis') else slice(0, None)


def _require_mean_convex(H: np.ndarray, name: str):
    if H.size == 0 or not np.all(H > 0.0):
        worst = float(np.min(H)) if H.size else float('nan')
        raise HypothesisViolationError(f"{name}: требуется H > 0, min H = {worst:.3e}",
                                       {'min_H': worst})


def _inner_nodes(p: Profile, fraction: float) -> np.ndarray:
    return np.nonzero(p.r <= fraction * p.grid.r_max)[0]


@dataclass(frozen=True, eq=False)
class _RadialJets:
    """Ряды до второго порядка в узлах: W, H и |A|^2"""
    W: np.ndarray
    H: np.ndarray
    A2: np.ndarray


def _geometry_jets(p: Profile, n: int) -> _RadialJets:
    """W, H и |A|^2 как ряды: u'' и выше из уравнения, без разностей"""
    jet = expander_jet(p.r, p.u, p.du, n, order=4)
    slope = series_derivative(jet.coefficients)[:3]
    d2 = series_derivative(series_derivative(jet.coefficients))
    w2 = series_mul(slope, slope)
    w2[0] += 1.0
    W = series_sqrt(w2)
    kappa_m = series_div(d2, series_mul(w2, W))
    kappa_p = series_div(jet.slope_over_r, W)
    H = kappa_m + (n - 1) * kappa_p
    A2 = series_mul(kappa_m, kappa_m) + (n - 1) * series_mul(kappa_p, kappa_p)
    return _RadialJets(W=W, H=H, A2=A2)


def _radial_derivatives(f: np.ndarray, r: np.ndarray):
    f1 = np.gradient(f, r, edge_order=2)
    f1[0] = 0.0
    f2 = np.gradient(f1, r, edge_order=2)
    return f1, f2


def _laplacian_and_drift(f1: np.ndarray, f2: np.ndarray, p: Profile, W: np.ndarray,
                         dW: np.ndarray, n: int):
    """Радиальный лапласиан на Sigma и x.grad f по f', f''; на оси предел n f''(0)"""
    r, u, du = p.r, p.u, p.du
    lap = np.empty_like(f1)
    lap[0] = n * f2[0]
    lap[1:] = (f2[1:] / W[1:] ** 2 + (n - 1) * f1[1:] / (r[1:] * W[1:] ** 2)
               - f1[1:] * dW[1:] / W[1:] ** 3)
    drift = (r + u * du) * f1 / W ** 2
    return lap, drift


def _uses_jets(sample: SurfaceSample) -> bool:
    return sample.method == 'expander-ode'


def curvature_ratio_bound(expander: Profile, cone: ConeSpec, n: int,
                          settings: Optional[AnalysisSettings] = None) -> CheckReport:
    """
    Оценка кривизны: sup |A|^2/H^2 <= 4K и |A|^2 <= K |x|^2 в каждом узле,
    где 4K берётся со звена конуса.
    """
    settings = settings or AnalysisSettings()
    sample = curvatures(expander, n)
    nodes = _examined(expander)
    H = sample.H[nodes]
    _require_mean_convex(H, 'curvature_ratio_bound')
    four_K = link_ratio(cone)
    K = four_K / 4.0
    ratio = sample.A2[nodes] / H ** 2
    excess_ratio = float(np.max(ratio)) / four_K - 1.0
    position = sample.position_norm[nodes] ** 2
    excess_pointwise = float(np.max(sample.A2[nodes] / (K * position))) - 1.0
    argmax = int(np.argmax(ratio))
    r_nodes = sample.r[nodes]
    details = {
        '4K': four_K,
        'K': K,
        'max_ratio': float(np.max(ratio)),
        'argmax_r': float(r_nodes[argmax]),
        'attained_in_tail': bool(r_nodes[argmax] >= expander.grid.r_max / 2.0),
        'max_pointwise_excess': excess_pointwise,
    }
    logger.info(f"Оценка кривизны: max |A|^2/H^2 = {details['max_ratio']:.6f}, 4K = {four_K:.6f}, "
                f"r* = {details['argmax_r']:.3f}")
    return CheckReport(name='curvature_ratio_bound',
                       sup_residual=max(excess_ratio, excess_pointwise),
                       tolerance=settings.ratio_tolerance, method=sample.method,
                       notes='относительное превышение 4K и K|x|^2', details=details)


def drift_H_residual(p: Profile, n: int, settings: Optional[AnalysisSettings] = None,
                     method: Optional[str] = None) -> CheckReport:
    """
    sup |Delta H + x.grad H/2 + (|A|^2 - 1/2) H + H| по внутренним узлам.
    Для решённых экспандеров H', H'' берутся из рядов по уравнению;
    method='finite-difference' принудительно считает их разностями.
    """
    settings = settings or AnalysisSettings()
    sample = curvatures(p, n, method)
    if _uses_jets(sample):
        jets = _geometry_jets(p, n)
        H, A2, W = jets.H[0], jets.A2[0], jets.W[0]
        lap, drift = _laplacian_and_drift(jets.H[1], 2.0 * jets.H[2], p, W, jets.W[1], n)
    else:
        H, A2, W = sample.H, sample.A2, sample.W
        H1, H2 = _radial_derivatives(H, p.r)
        dW = p.du * sample.kappa_m * W ** 2
        lap, drift = _laplacian_and_drift(H1, H2, p, W, dW, n)
    residual = lap + drift / 2.0 + (A2 - 0.5) * H + H
    inner = _inner_nodes(p, settings.inner_fraction)
    values = residual[inner]
    signs = np.sign(values[np.abs(values) > 0.0])
    details = {
        'nodes': int(inner.size),
        'sign_changes': int(np.count_nonzero(np.diff(signs))) if signs.size > 1 else 0,
        'mean_residual': float(np.mean(values)),
    }
    sup = float(np.max(np.abs(values)))
    logger.info(f"Тождество L H = -H ({sample.method}): невязка {sup:.3e} на {inner.size} узлах")
    return CheckReport(name='drift_H_residual', sup_residual=sup, tolerance=settings.drift_tolerance,
                       method=sample.method,
                       notes=f"внутренние {settings.inner_fraction:.0%} узлов", details=details)


def ratio_subsolution_check(p: Profile, n: int, settings: Optional[AnalysisSettings] = None,
                            method: Optional[str] = None) -> CheckReport:
    """Оператор Delta + x.grad/2 + 2 grad log H . grad от |A|^2/H^2 должен быть >= 0"""
    settings = settings or AnalysisSettings()
    sample = curvatures(p, n, method)
    nodes = _examined(p)
    start = nodes.start or 0
    if _uses_jets(sample):
        jets = _geometry_jets(p, n)
        _require_mean_convex(jets.H[0, nodes], 'ratio_subsolution_check')
        f = series_div(jets.A2, series_mul(jets.H, jets.H))
        W, H, H1 = jets.W[0], jets.H[0], jets.H[1]
        f1, f2 = f[1], 2.0 * f[2]
        lap, drift = _laplacian_and_drift(f1, f2, p, W, jets.W[1], n)
    else:
        _require_mean_convex(sample.H[nodes], 'ratio_subsolution_check')
        W, H = sample.W, sample.H
        ratio = np.empty_like(H)
        ratio[nodes] = sample.A2[nodes] / H[nodes] ** 2
        ratio[:start] = ratio[start]
        f1, f2 = _radial_derivatives(ratio, p.r)
        H1, _ = _radial_derivatives(H, p.r)
        dW = p.du * sample.kappa_m * W ** 2
        lap, drift = _laplacian_and_drift(f1, f2, p, W, dW, n)
    H_safe = np.where(H > 0.0, H, 1.0)
    value = lap + drift / 2.0 + 2.0 * (H1 / H_safe) * f1 / W ** 2
    inner = _inner_nodes(p, settings.inner_fraction)
    inner = inner[inner >= start]
    minimum = float(np.min(value[inner]))
    logger.info(f"Субрешение для |A|^2/H^2 ({sample.method}): минимум {minimum:.3e}")
    return CheckReport(name='ratio_subsolution', sup_residual=max(0.0, -minimum),
                       tolerance=settings.subsolution_tolerance, method=sample.method,
                       notes=f"внутренние {settings.inner_fraction:.0%} узлов",
                       details={'min_value': minimum, 'max_value': float(np.max(value[inner])),
                                'argmin_r': float(p.r[inner][int(np.argmin(value[inner]))])})


def H_identity_check(p: Profile, n: int, settings: Optional[AnalysisSettings] = None) -> CheckReport:
    """H по формуле кривизн (u'' разностями) против x.nu/2 = (u - r u')/(2W)"""
    settings = settings or AnalysisSettings()
    sample = curvatures(p, n, method='finite-difference')
    expected = (p.u - p.r * p.du) / (2.0 * sample.W)
    inner = _inner_nodes(p, settings.inner_fraction)
    sup = float(np.max(np.abs(sample.H[inner] - expected[inner])))
    logger.info(f"Две формулы для H: расхождение {sup:.3e}")
    return CheckReport(name='H_identity', sup_residual=sup, tolerance=settings.h_identity_tolerance,
                       method=sample.method, notes='H = (u - r u\')/(2W)')


def cauchy_schwarz_check(sample: SurfaceSample, n: Optional[int] = None) -> CheckReport:
    """|A|^2 >= H^2/n в каждом узле"""
    n = sample.n if n is None else n
    A2, H = sample.A2, sample.H
    gap = H ** 2 / n - A2
    tolerance = 1e-12 * max(1.0, float(np.max(A2)))
    return CheckReport(name='cauchy_schwarz', sup_residual=max(0.0, float(np.max(gap))),
                       tolerance=tolerance, method=sample.method,
                       details={'umbilic_nodes': int(np.count_nonzero(sample.umbilic()))})


def mean_convexity_check(p: Profile, n: int) -> CheckReport:
    """min H > 0; плоский профиль (H = 0 тождественно) нарушает предположение"""
    sample = curvatures(p, n)
    H = sample.H[_examined(p)]
    if np.all(np.abs(H) < 1e-14):
        raise HypothesisViolationError("H = 0 тождественно: поверхность плоская", {'max_abs_H': 0.0})
    min_H = float(np.min(H))
    return CheckReport(name='mean_convexity', sup_residual=max(0.0, -min_H), tolerance=0.0,
                       method=sample.method, details={'min_H': min_H, 'max_H': float(np.max(H))})


def decay_check(p: Profile, cone: ConeSpec, n: int, a: float,
                settings: Optional[AnalysisSettings] = None,
                solver: Optional[SolverSettings] = None) -> CheckReport:
    """Постоянная затухания устойчива при удвоении r_max (профиль пересчитывается с той же a)"""
    settings = settings or AnalysisSettings()
    solver = solver or SolverSettings()
    M = decay_constant(p, cone, solver.trace_tolerance)
    grid = p.grid
    wide = make_radial_grid(2 * grid.N, 2.0 * grid.r_max, grid.stretch)
    tol = p.meta.get('tol', solver.tol) or solver.tol
    extended = integrate_profile(n, a, wide.r_max, tol, grid=wide, settings=solver)
    M_wide = decay_constant(extended, cone, solver.trace_tolerance)
    change = abs(M_wide - M) / M if M > 0 else abs(M_wide - M)
    logger.info(f"Затухание: M({grid.r_max:g}) = {M:.6g}, M({wide.r_max:g}) = {M_wide:.6g}")
    return CheckReport(name='decay', sup_residual=change, tolerance=settings.decay_stability,
                       method='re-integration',
                       details={'M': M, 'M_wide': M_wide, 'r_max': grid.r_max, 'r_max_wide': wide.r_max,
                                'limit_value': (n - 1) * cone.tau})


def refinement_order(errors: Sequence[float], nodes: Sequence[float], k: int = 3) -> float:
    """Наклон log(error) от log(N) по k самым мелким сеткам"""
    x = np.log10(np.asarray(nodes, dtype=float))
    y = np.log10(np.asarray(errors, dtype=float))
    if x.size < 2:
        raise InvalidParameterError("для порядка сходимости нужно хотя бы две сетки")
    k = min(k, x.size)
    A = np.vstack([x[-k:], np.ones(k)]).T
    m = np.linalg.lstsq(A, y[-k:], rcond=None)[0][0]
    return float(-m)


def _merge_labels(labels: np.ndarray, pairs: Iterable) -> np.ndarray:
    """Склейка компонент через шов по углу"""
    parent: Dict[int, int] = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for a, b in pairs:
        if a and b:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    if not parent:
        return labels
    lookup = np.arange(labels.max() + 1)
    for key in range(1, lookup.size):
        lookup[key] = find(key)
    return lookup[labels]


def graph_window_check(p: Profile, n: int, node: int, delta: float, scale_r: float,
                       angles: Optional[int] = None) -> bool:
    """
    Является ли Sigma в цилиндре C_e(x0, r, delta r) графиком над касательной
    плоскостью размера < delta: sup|h|/r + sup|grad h|, e - нормаль в узле.

    Поверхность сэмплируется на сетке (узел, угол) в плоскости (e1, e2);
    остальные направления эквивалентны по симметрии.
    """
    if not 0 < node < p.grid.N:
        raise InvalidParameterError(f"узел должен быть внутренним, получено {node}", {'node': node})
    if not delta > 0 or not scale_r > 0:
        raise InvalidParameterError("delta и scale_r должны быть > 0", {'delta': delta, 'scale_r': scale_r})
    angles = angles or AnalysisSettings().window_angles
    r, u, du = p.r, p.u, p.du
    W = np.sqrt(1.0 + du ** 2)
    e_r, e_z = -du[node] / W[node], 1.0 / W[node]
    phi = np.linspace(0.0, 2.0 * math.pi, angles, endpoint=False)
    c, s = np.cos(phi)[None, :], np.sin(phi)[None, :]

    dx = r[:, None] * c - r[node]
    dy = r[:, None] * s
    dz = np.broadcast_to((u - u[node])[:, None], dx.shape)
    h = dx * e_r + dz * e_z
    lateral = np.sqrt(np.maximum(dx ** 2 + dy ** 2 + dz ** 2 - h ** 2, 0.0))
    inside = (lateral < scale_r) & (np.abs(h) < delta * scale_r)

    labels, _ = ndimage.label(inside)
    labels = _merge_labels(labels, zip(labels[:, 0], labels[:, -1]))
    main = labels == labels[node, 0]
    if np.any(main[-1]):
        raise WindowEscapesGridError("окно выходит за внешний край сетки",
                                     {'node': node, 'scale_r': scale_r, 'r_max': p.grid.r_max})
    if np.any(inside & ~main):
        return False

    nu_e = (-du[:, None] * c * e_r + e_z) / W[:, None]
    if np.any(nu_e[main] <= 0.0):
        return False

    neighbours = main.copy()
    neighbours[1:] |= main[:-1]
    neighbours[:-1] |= main[1:]
    neighbours |= np.roll(main, 1, axis=1) | np.roll(main, -1, axis=1)
    if np.any(neighbours & ~inside & (lateral < scale_r)):
        return False

    tilt = np.sqrt(np.maximum(1.0 - nu_e[main] ** 2, 0.0)) / nu_e[main]
    size = float(np.max(np.abs(h[main]))) / scale_r + float(np.max(tilt))
    logger.debug(f"Окно в узле {node}: размер {size:.4g} (delta={delta}, r={scale_r})")
    return size < delta
