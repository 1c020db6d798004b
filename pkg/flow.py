# -*- coding: utf-8 -*-
"""
Радиальный поток средней кривизны для графиков u(t, r) и поток
геодезических сфер на S^n (звенья вращательно-симметричных конусов).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from core import ConeSpec, Profile, RadialGrid
from errors import (CFLUnderflowError, InvalidParameterError, PastExtinctionError,
                    SlopeCapExceededError)
from settings import BoundaryMode, FlowSettings

logger = logging.getLogger(__name__)


@dataclass
class FlowParams:
    """Параметры явной схемы"""
    cfl: float = 0.4
    boundary: str = BoundaryMode.dirichlet.value
    slope_cap: float = 50.0
    dt_min: float = 1e-14
    snapshot_times: List[float] = field(default_factory=list)
    log_every: int = 5000

    def __post_init__(self):
        self.boundary = BoundaryMode(self.boundary).value
        if not 0.0 < self.cfl <= 1.0:
            raise InvalidParameterError(f"cfl должен лежать в (0, 1], получено {self.cfl}")

    @classmethod
    def from_settings(cls, settings: FlowSettings) -> 'FlowParams':
        return cls(cfl=settings.cfl, boundary=settings.boundary.value, slope_cap=settings.slope_cap,
                   dt_min=settings.dt_min, snapshot_times=list(settings.snapshot_times),
                   log_every=settings.log_every)


@dataclass
class FlowState:
    """Снимок потока в момент t с диагностикой шага"""
    t: float
    profile: Profile
    dt_last: float
    cfl: float
    steps: int = 0
    cfl_min: float = math.inf
    max_slope_growth: float = 0.0
    min_normal_speed: float = math.inf
    boundary: str = BoundaryMode.dirichlet.value
    snapshots: List[Tuple[float, Profile]] = field(default_factory=list)

    def snapshot(self, t: float) -> 'FlowState':
        """Состояние из сохранённого снимка с временем t"""
        for time, profile in self.snapshots:
            if math.isclose(time, t, rel_tol=1e-12, abs_tol=1e-15):
                return FlowState(t=time, profile=profile, dt_last=self.dt_last, cfl=self.cfl,
                                 boundary=self.boundary)
        raise InvalidParameterError(f"снимок t={t} не сохранён",
                                    {'available': [time for time, _ in self.snapshots]})

    def summary(self) -> dict:
        return {'t_end': self.t, 'steps': self.steps, 'dt_last': self.dt_last,
                'cfl_min': self.cfl_min, 'max_slope_growth': self.max_slope_growth,
                'min_normal_speed': self.min_normal_speed, 'boundary_mode': self.boundary}


@dataclass(frozen=True)
class LinkState:
    """Геодезическая сфера полярного радиуса theta в S^n"""
    n: int
    theta: float
    t: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi:
            raise InvalidParameterError(f"theta должен лежать в (0, pi), получено {self.theta}",
                                        {'theta': self.theta})
        if self.t < 0:
            raise InvalidParameterError(f"t должно быть >= 0, получено {self.t}")

    @property
    def cot2(self) -> float:
        return 1.0 / math.tan(self.theta) ** 2

    @property
    def A2(self) -> float:
        return (self.n - 1) * self.cot2

    @property
    def H(self) -> float:
        return (self.n - 1) / math.tan(self.theta)

    def to_cone(self) -> ConeSpec:
        """Конус над звеном: cos(phi) = tau/sqrt(1+tau^2) при phi = theta"""
        return ConeSpec.from_link_angle(self.n, self.theta)


def mollified_cone(tau: float, eps: float, grid: RadialGrid) -> Profile:
    """Сглаженный конус u = tau*sqrt(eps + r^2)"""
    if not tau > 0 or not eps > 0:
        raise InvalidParameterError("tau и eps должны быть > 0", {'tau': tau, 'eps': eps})
    r = grid.nodes
    root = np.sqrt(eps + r ** 2)
    du = tau * r / root
    du[0] = 0.0
    return Profile(grid, tau * root, du, {'kind': 'mollified-cone', 'tau': tau, 'eps': eps})


class _Stencil:
    """Трёхточечные разности на неравномерной сетке"""

    def __init__(self, grid: RadialGrid, n: int):
        r = grid.nodes
        self.n = n
        self.r = r
        self.hm = r[1:-1] - r[:-2]
        self.hp = r[2:] - r[1:-1]
        self.h_last = r[-1] - r[-2]
        self.dt_stable = min(float(np.min(self.hm * self.hp)) / 2.0, r[1] ** 2 / (2.0 * n))

    def slopes(self, u: np.ndarray) -> np.ndarray:
        hm, hp = self.hm, self.hp
        return (hm ** 2 * (u[2:] - u[1:-1]) + hp ** 2 * (u[1:-1] - u[:-2])) / (hm * hp * (hm + hp))

    def apply(self, u: np.ndarray, boundary: str, far_slope: float) -> Tuple[np.ndarray, np.ndarray]:
        """Правая часть u_t = u''/(1+u'^2) + (n-1)u'/r и центральные наклоны"""
        n, r, hm, hp = self.n, self.r, self.hm, self.hp
        rhs = np.empty_like(u)
        slopes = np.empty_like(u)
        p = self.slopes(u)
        d2 = 2.0 * ((u[2:] - u[1:-1]) / hp - (u[1:-1] - u[:-2]) / hm) / (hm + hp)
        rhs[1:-1] = d2 / (1.0 + p ** 2) + (n - 1) * p / r[1:-1]
        rhs[0] = 2.0 * n * (u[1] - u[0]) / r[1] ** 2
        slopes[0] = 0.0
        slopes[1:-1] = p
        if boundary == BoundaryMode.neumann.value:
            h = self.h_last
            ghost = u[-2] + 2.0 * h * far_slope
            rhs[-1] = (ghost - 2.0 * u[-1] + u[-2]) / h ** 2 / (1.0 + far_slope ** 2) \
                + (n - 1) * far_slope / r[-1]
            slopes[-1] = far_slope
        else:
            rhs[-1] = 0.0
            slopes[-1] = (u[-1] - u[-2]) / self.h_last
        return rhs, slopes


def spatial_operator(u: np.ndarray, grid: RadialGrid, n: int,
                     boundary: str = BoundaryMode.dirichlet.value,
                     far_slope: float = 0.0) -> np.ndarray:
    """Дискретная правая часть радиального потока во всех узлах"""
    u = np.asarray(u, dtype=float)
    if u.size != grid.nodes.size:
        raise InvalidParameterError("длина u не совпадает с числом узлов")
    return _Stencil(grid, n).apply(u, BoundaryMode(boundary).value, far_slope)[0]


def evolve_radial_mcf(u0: Profile, n: int, t_end: float,
                      params: Optional[FlowParams] = None) -> FlowState:
    """
    Явная схема метода прямых для u_t = u''/(1+u'^2) + (n-1)u'/r.

    Шаг dt = cfl * dt_stable, где dt_stable учитывает строку на оси;
    на внешней границе u(r_max) закреплено (Дирихле) или u' = u0'(r_max) (Нейман).
    """
    params = params or FlowParams()
    if not t_end > 0:
        raise InvalidParameterError(f"t_end должно быть > 0, получено {t_end}", {'t_end': t_end})
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"n должно быть целым >= 2, получено {n}")

    grid = u0.grid
    stencil = _Stencil(grid, n)
    far_slope = float(u0.du[-1])
    u = np.array(u0.u, dtype=float)
    marks = sorted({t for t in params.snapshot_times if 0.0 < t < t_end} | {t_end})
    snapshots: List[Tuple[float, Profile]] = [(0.0, u0)]

    rhs, slopes = stencil.apply(u, params.boundary, far_slope)
    slope0 = float(np.max(np.abs(slopes)))
    max_slope = slope0
    min_speed = float(np.min(rhs[:-1]))
    t = 0.0
    steps = 0
    dt = cfl_last = 0.0
    cfl_min = math.inf
    mark = 0

    logger.info(f"Поток: n={n}, t_end={t_end}, N={grid.N}, граница {params.boundary}, "
                f"dt_stable={stencil.dt_stable:.3e}")
    while mark < len(marks):
        target = marks[mark]
        dt = params.cfl * stencil.dt_stable
        if dt < params.dt_min:
            raise CFLUnderflowError(f"шаг {dt:.3e} меньше dt_min={params.dt_min:.1e}",
                                    {'t': t, 'dt': dt})
        hit = t + dt >= target * (1.0 - 1e-14)
        if hit:
            dt = target - t
        u += dt * rhs
        t = target if hit else t + dt
        steps += 1
        cfl_last = dt / stencil.dt_stable
        cfl_min = min(cfl_min, cfl_last)

        rhs, slopes = stencil.apply(u, params.boundary, far_slope)
        step_slope = float(np.max(np.abs(slopes)))
        if step_slope > params.slope_cap:
            raise SlopeCapExceededError(f"|u'| = {step_slope:.3g} превысил предел {params.slope_cap:g}",
                                        {'t': t, 'slope': step_slope})
        max_slope = max(max_slope, step_slope)
        min_speed = min(min_speed, float(np.min(rhs[:-1])))

        if steps % params.log_every == 0:
            logger.info(f"Шаг {steps}: t={t:.6f}, max|u'|={step_slope:.6f}")
        if hit:
            du = np.empty_like(u)
            du[:] = slopes
            du[0] = 0.0
            meta = dict(u0.meta)
            meta.update({'kind': 'flow', 'n': n, 't': t})
            snapshots.append((t, Profile(grid, u.copy(), du, meta)))
            mark += 1

    logger.info(f"Поток завершён: {steps} шагов, рост наклона {max_slope - slope0:.2e}")
    return FlowState(t=t, profile=snapshots[-1][1], dt_last=dt, cfl=cfl_last, steps=steps,
                     cfl_min=cfl_min, max_slope_growth=max(0.0, max_slope - slope0),
                     min_normal_speed=min_speed, boundary=params.boundary, snapshots=snapshots)


def self_similarity_defect(state1: FlowState, state2: FlowState) -> float:
    """sup по внутренней половине сетки |u(t2,r) - sqrt(t2/t1) u(t1, r sqrt(t1/t2))|"""
    t1, t2 = state1.t, state2.t
    if not 0.0 < t1 < t2:
        raise InvalidParameterError(f"нужно 0 < t1 < t2, получено t1={t1}, t2={t2}")
    if not np.array_equal(state1.profile.r, state2.profile.r):
        raise InvalidParameterError("состояния должны лежать на одной сетке")
    r = state2.profile.r
    inner = r <= r[-1] / 2.0
    ratio = math.sqrt(t2 / t1)
    rescaled = ratio * np.interp(r[inner] / ratio, state1.profile.r, state1.profile.u)
    return float(np.max(np.abs(state2.profile.u[inner] - rescaled)))


def extinction_time(n: int, theta0: float) -> float:
    """Время исчезновения геодезической сферы: -ln|cos theta0|/(n-1)"""
    c = math.cos(theta0)
    if abs(c) < 1e-15:
        return math.inf
    return -math.log(abs(c)) / (n - 1)


def link_sphere_flow(n: int, theta0: float, t: float, method: str = "closed") -> LinkState:
    """
    Поток геодезической сферы: d theta/dt = -(n-1) cot theta,
    cos theta(t) = cos theta0 * exp((n-1) t).
    """
    if int(n) != n or n < 2:
        raise InvalidParameterError(f"n должно быть целым >= 2, получено {n}")
    LinkState(n, theta0)
    if t < 0:
        raise InvalidParameterError(f"t должно быть >= 0, получено {t}")
    T = extinction_time(n, theta0)
    if t >= T:
        raise PastExtinctionError(f"t={t:.6g} не меньше времени исчезновения T={T:.6g}",
                                  {'t': t, 'extinction_time': T, 'theta0': theta0})
    if math.isinf(T) or t == 0.0:
        return LinkState(n, theta0, t)

    if method == "closed":
        theta = math.acos(math.cos(theta0) * math.exp((n - 1) * t))
    elif method == "ode":
        sol = solve_ivp(lambda s, y: [-(n - 1) / math.tan(y[0])], (0.0, t), [theta0],
                        method='DOP853', rtol=1e-12, atol=1e-13)
        if not sol.success:
            raise InvalidParameterError(f"интегрирование потока звена не удалось: {sol.message}")
        theta = float(sol.y[0, -1])
    else:
        raise InvalidParameterError(f"неизвестный метод '{method}', ожидается closed или ode")
    return LinkState(n, theta, t)


def pinching_check(link: LinkState) -> Tuple[bool, float]:
    """
    Условие пинчинга для омбилического звена: |A|^2 < H^2/(n-2) + 2 при n >= 4,
    |A|^2 < 3H^2/4 + 4/3 при n = 3; при n = 2 выполняется тривиально.
    """
    if link.n == 2:
        return True, math.inf
    if link.n == 3:
        rhs = 0.75 * link.H ** 2 + 4.0 / 3.0
    else:
        rhs = link.H ** 2 / (link.n - 2) + 2.0
    margin = rhs - link.A2
    return margin > 0.0, margin


def link_mean_convex(link: LinkState) -> bool:
    """H > 0 для геодезической сферы, т.е. theta < pi/2"""
    return link.H > 0.0
