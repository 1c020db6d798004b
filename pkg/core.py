# -*- coding: utf-8 -*-
"""
Базовые объекты лаборатории: радиальные сетки, профили u(r),
меридианы поверхностей вращения, весовые нормы и след на бесконечности.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from errors import InvalidParameterError, TraceNotConvergedError
from settings import SolverSettings

logger = logging.getLogger(__name__)

MIN_INTERVALS = 16
MIN_TRACE_RADIUS = 10.0


def _frozen_array(values: Any, name: str) -> np.ndarray:
    """Копия массива float64 только для чтения"""
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise InvalidParameterError(f"{name} должен быть одномерным массивом", {'shape': arr.shape})
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ConeSpec:
    """Вращательно-симметричный конус: график x -> tau|x| над R^n"""
    n: int
    tau: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParameterError(f"n должно быть целым >= 2, получено {self.n}", {'n': self.n})
        if not math.isfinite(self.tau) or self.tau < 0:
            raise InvalidParameterError(f"tau должно быть >= 0, получено {self.tau}", {'tau': self.tau})

    @property
    def is_flat(self) -> bool:
        return self.tau == 0.0

    @property
    def link_angle(self) -> float:
        """Полярный угол звена от положительной вертикальной оси"""
        return math.atan2(1.0, self.tau)

    def link_point(self) -> Tuple[float, float]:
        """Точка звена на единичной сфере: (радиальная, вертикальная) компоненты"""
        norm = math.hypot(1.0, self.tau)
        return 1.0 / norm, self.tau / norm

    @classmethod
    def from_link_angle(cls, n: int, phi: float) -> 'ConeSpec':
        """Конус по полярному углу звена, cos(phi) = tau/sqrt(1+tau^2)"""
        if not 0.0 < phi <= math.pi / 2:
            raise InvalidParameterError(f"угол звена должен лежать в (0, pi/2], получено {phi}", {'phi': phi})
        tau = 0.0 if phi == math.pi / 2 else 1.0 / math.tan(phi)
        return cls(n=n, tau=max(tau, 0.0))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Сетка радиусов 0 = r_0 < r_1 < ... < r_N"""
    nodes: np.ndarray
    stretch: float = 1.0

    def __post_init__(self):
        nodes = _frozen_array(self.nodes, 'nodes')
        object.__setattr__(self, 'nodes', nodes)
        if nodes.size - 1 < MIN_INTERVALS:
            raise InvalidParameterError(
                f"сетка должна содержать не менее {MIN_INTERVALS} интервалов, получено {nodes.size - 1}",
                {'N': nodes.size - 1})
        if nodes[0] != 0.0:
            raise InvalidParameterError("первый узел сетки должен быть 0", {'r0': float(nodes[0])})
        steps = np.diff(nodes)
        if not np.all(np.isfinite(nodes)) or np.any(steps <= 0):
            raise InvalidParameterError("узлы сетки должны строго возрастать")
        if self.stretch < 1.0:
            raise InvalidParameterError(f"stretch должен быть >= 1, получено {self.stretch}")
        ratios = steps[1:] / steps[:-1]
        if np.any(ratios > self.stretch * (1.0 + 1e-9)):
            raise InvalidParameterError("отношение соседних шагов превышает stretch",
                                        {'max_ratio': float(ratios.max()), 'stretch': self.stretch})

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    def scaled(self, rho: float) -> 'RadialGrid':
        return RadialGrid(self.nodes * rho, self.stretch)

    def describe(self) -> Dict[str, float]:
        return {'N': self.N, 'r_max': self.r_max, 'stretch': self.stretch}


def make_radial_grid(N: int, r_max: float, stretch: float = 1.0) -> RadialGrid:
    """
    Геометрическая сетка h_i = h_0 * stretch**i, сгущающаяся к оси.
    Последний узел принудительно равен r_max.
    """
    if int(N) != N or N < MIN_INTERVALS:
        raise InvalidParameterError(f"N должно быть целым >= {MIN_INTERVALS}, получено {N}", {'N': N})
    if not math.isfinite(r_max) or r_max <= 0:
        raise InvalidParameterError(f"r_max должен быть > 0, получено {r_max}", {'r_max': r_max})
    if not math.isfinite(stretch) or stretch < 1.0:
        raise InvalidParameterError(f"stretch должен быть >= 1, получено {stretch}", {'stretch': stretch})

    N = int(N)
    if stretch == 1.0:
        nodes = np.linspace(0.0, r_max, N + 1)
    else:
        log_s = math.log(stretch)
        h0 = r_max * math.expm1(log_s) / math.expm1(N * log_s)
        steps = h0 * np.exp(log_s * np.arange(N))
        nodes = np.concatenate(([0.0], np.cumsum(steps)))
    nodes[-1] = r_max
    return RadialGrid(nodes, float(stretch))


@dataclass(frozen=True, eq=False)
class MeridianCurve:
    """
    Меридиан поверхности вращения: (rho(t), z(t)) с производными по параметру.
    Нужен для поверхностей, не являющихся целыми графиками (сферы).
    """
    param: np.ndarray
    rho: np.ndarray
    z: np.ndarray
    drho: np.ndarray
    dz: np.ndarray
    closed: bool = False

    def __post_init__(self):
        for name in ('param', 'rho', 'z', 'drho', 'dz'):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), name))
        size = self.param.size
        if any(getattr(self, name).size != size for name in ('rho', 'z', 'drho', 'dz')):
            raise InvalidParameterError("массивы меридиана должны иметь одинаковую длину")
        if np.any(np.diff(self.param) <= 0):
            raise InvalidParameterError("параметр меридиана должен строго возрастать")
        if np.any(self.rho < 0):
            raise InvalidParameterError("rho меридиана должно быть неотрицательным")

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.drho, self.dz)

    def splines(self) -> Tuple[CubicHermiteSpline, CubicHermiteSpline]:
        return (CubicHermiteSpline(self.param, self.rho, self.drho),
                CubicHermiteSpline(self.param, self.z, self.dz))


def sphere_meridian(R: float, N: int = 4096) -> MeridianCurve:
    """Меридиан круглой сферы радиуса R с центром в начале координат"""
    if R <= 0:
        raise InvalidParameterError(f"радиус сферы должен быть > 0, получено {R}")
    t = np.linspace(0.0, math.pi, N + 1)
    return MeridianCurve(param=t, rho=R * np.sin(t), z=R * np.cos(t),
                         drho=R * np.cos(t), dz=-R * np.sin(t), closed=True)


@dataclass(frozen=True, eq=False)
class Profile:
    """Радиальный график u(r) на сетке вместе с u'(r)"""
    grid: RadialGrid
    u: np.ndarray
    du: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        u = _frozen_array(self.u, 'u')
        du = _frozen_array(self.du, 'du')
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, 'du', du)
        object.__setattr__(self, 'meta', dict(self.meta))
        size = self.grid.nodes.size
        if u.size != size or du.size != size:
            raise InvalidParameterError("длины u и du должны совпадать с числом узлов",
                                        {'nodes': size, 'u': u.size, 'du': du.size})
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
            raise InvalidParameterError("профиль содержит NaN или бесконечность")
        if du[0] != 0.0:
            raise InvalidParameterError("du[0] должно быть 0 (гладкость на оси)", {'du0': float(du[0])})

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def kind(self) -> str:
        return self.meta.get('kind', 'samples')

    def with_meta(self, **extra: Any) -> 'Profile':
        meta = dict(self.meta)
        meta.update(extra)
        return Profile(self.grid, self.u, self.du, meta)

    def scaled(self, rho: float) -> 'Profile':
        """Растяжение rho*Sigma: узлы и высоты умножаются на rho, наклоны не меняются"""
        if rho <= 0:
            raise InvalidParameterError(f"коэффициент растяжения должен быть > 0, получено {rho}")
        meta = dict(self.meta)
        meta['scale'] = meta.get('scale', 1.0) * rho
        return Profile(self.grid.scaled(rho), self.u * rho, self.du, meta)

    def interpolant(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.r, self.u, self.du)

    def to_meridian(self) -> MeridianCurve:
        r = self.r
        return MeridianCurve(param=r, rho=r, z=self.u, drho=np.ones_like(r), dz=self.du)


def cone_profile(cone: ConeSpec, grid: RadialGrid) -> Profile:
    """Конус u = tau*r; du[0] = 0 по соглашению (вершина особая)"""
    r = grid.nodes
    du = np.full_like(r, cone.tau)
    du[0] = 0.0
    return Profile(grid, cone.tau * r, du,
                   {'kind': 'cone', 'n': cone.n, 'tau': cone.tau, 'singular_axis': True})


def profile_from_samples(grid: RadialGrid, u: Any, du: Optional[Any] = None,
                         meta: Optional[Dict[str, Any]] = None) -> Profile:
    """Профиль по отсчётам; без du производная берётся разностями второго порядка"""
    u = np.asarray(u, dtype=float)
    if du is None:
        if u.size != grid.nodes.size:
            raise InvalidParameterError("длина u не совпадает с числом узлов")
        du = np.gradient(u, grid.nodes, edge_order=2)
        method = 'finite-difference'
    else:
        du = np.array(du, dtype=float)
        method = 'stored'
    du[0] = 0.0
    meta = dict(meta or {})
    meta.setdefault('kind', 'samples')
    meta.setdefault('du_method', method)
    return Profile(grid, u, du, meta)


def second_derivative(p: Profile) -> np.ndarray:
    """u'' центральными разностями по du; на оси симметричное значение du[1]/r[1]"""
    d2 = np.gradient(p.du, p.r, edge_order=2)
    d2[0] = p.du[1] / p.r[1]
    return d2


# Усечённые ряды Тейлора: массив (K+1, M), строка k - коэффициенты при t^k в M узлах

def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    for k in range(a.shape[0]):
        out[k] = np.sum(a[:k + 1] * b[k::-1], axis=0)
    return out


def series_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a/b; старший член b не должен обращаться в ноль"""
    q = np.zeros_like(a)
    for k in range(a.shape[0]):
        q[k] = (a[k] - np.sum(q[:k] * b[k:0:-1], axis=0)) / b[0]
    return q


def series_sqrt(a: np.ndarray) -> np.ndarray:
    s = np.zeros_like(a)
    s[0] = np.sqrt(a[0])
    for k in range(1, a.shape[0]):
        s[k] = (a[k] - np.sum(s[1:k] * s[k - 1:0:-1], axis=0)) / (2.0 * s[0])
    return s


def series_derivative(a: np.ndarray) -> np.ndarray:
    """Ряд производной, на один коэффициент короче"""
    k = np.arange(1, a.shape[0], dtype=float).reshape(-1, *([1] * (a.ndim - 1)))
    return k * a[1:]


@dataclass(frozen=True)
class WeightedNormSpec:
    """Параметры весовой нормы: показатель веса d, порядок l, размерность n"""
    d: float
    l: int
    n: int = 2

    def __post_init__(self):
        if self.l not in (0, 1, 2):
            raise InvalidParameterError(f"порядок нормы l должен быть 0, 1 или 2, получено {self.l}",
                                        {'l': self.l})
        if self.n < 2:
            raise InvalidParameterError(f"n должно быть >= 2, получено {self.n}")


def weighted_norm(p: Profile, spec: WeightedNormSpec, base: Optional[Profile] = None) -> float:
    """
    Дискретная весовая sup-норма sum_{i<=l} sup (|x|+1)^{-d+i} |grad^i u|.

    Радиус веса |x| = sqrt(r^2 + z^2) берётся на поверхности base
    (по умолчанию на графике самого профиля).
    """
    surface = base if base is not None else p
    if not np.array_equal(surface.r, p.r):
        raise InvalidParameterError("профиль и база весов должны лежать на одной сетке")

    weight = np.hypot(p.r, surface.u) + 1.0
    total = float(np.max(weight ** (-spec.d) * np.abs(p.u)))
    if spec.l >= 1:
        total += float(np.max(weight ** (1.0 - spec.d) * np.abs(p.du)))
    if spec.l == 2:
        d2 = second_derivative(p)
        tangential = np.empty_like(d2)
        tangential[0] = d2[0]
        tangential[1:] = p.du[1:] / p.r[1:]
        hessian = np.sqrt(d2 ** 2 + (spec.n - 1) * tangential ** 2)
        total += float(np.max(weight ** (2.0 - spec.d) * hessian))
    return total


@dataclass(frozen=True)
class TraceEstimate:
    """Оценка асимптотического наклона по трём хвостовым узлам"""
    value: float
    two_term: float
    spread: float
    radii: Tuple[float, float, float]


def _tail_indices(r: np.ndarray) -> Tuple[int, int, int]:
    r_max = r[-1]
    picks = [int(np.argmin(np.abs(r - target))) for target in (r_max / 4.0, r_max / 2.0, r_max)]
    if len(set(picks)) < 3:
        raise InvalidParameterError("недостаточно хвостовых узлов для экстраполяции следа")
    return picks[0], picks[1], picks[2]


def estimate_trace(p: Profile) -> TraceEstimate:
    """
    Экстраполяция Ричардсона u(r)/r = tau + c x + e x^2 по x = 1/r^2
    в узлах, ближайших к r_max/4, r_max/2, r_max.
    """
    if p.grid.r_max < MIN_TRACE_RADIUS:
        raise InvalidParameterError(
            f"для следа на бесконечности нужен r_max >= {MIN_TRACE_RADIUS}, получено {p.grid.r_max}",
            {'r_max': p.grid.r_max})
    idx = _tail_indices(p.r)
    r = p.r[list(idx)]
    q = p.u[list(idx)] / r
    x = 1.0 / r ** 2
    vander = np.vander(x, 3, increasing=True)
    value = float(np.linalg.solve(vander, q)[0])
    two_term = float((q[2] * x[1] - q[1] * x[2]) / (x[1] - x[2]))
    return TraceEstimate(value=value, two_term=two_term, spread=abs(value - two_term),
                         radii=(float(r[0]), float(r[1]), float(r[2])))


def trace_at_infinity(p: Profile, tolerance: Optional[float] = None) -> float:
    """Асимптотический наклон профиля; расхождение оценок сверх допуска - ошибка"""
    tolerance = SolverSettings().trace_tolerance if tolerance is None else tolerance
    estimate = estimate_trace(p)
    if estimate.spread > tolerance:
        raise TraceNotConvergedError(
            f"оценки следа расходятся на {estimate.spread:.3e} > {tolerance:.1e}",
            {'value': estimate.value, 'two_term': estimate.two_term, 'spread': estimate.spread})
    logger.debug(f"След на бесконечности: {estimate.value:.12g} (разброс {estimate.spread:.2e})")
    return estimate.value


def homogeneous_extension(link_value: float, degree: float, radius: float) -> float:
    """Однородное продолжение степени degree: radius**degree * link_value"""
    if not radius > 0:
        raise InvalidParameterError(f"радиус должен быть > 0, получено {radius}", {'radius': radius})
    return radius ** degree * link_value
