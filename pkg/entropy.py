# -*- coding: utf-8 -*-
"""
Гауссова площадь F и энтропия lambda для поверхностей вращения.

F[s*Sigma + y] = (4pi)^{-n/2} * int exp(-|s x + y|^2/4),
где усреднение по орбите S^{n-1} берётся в замкнутом виде через
экспоненциально масштабированную функцию Бесселя.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize, special

from analysis import CheckReport
from core import ConeSpec, MeridianCurve, Profile, estimate_trace
from errors import InvalidParameterError, QuadratureToleranceError, SearchRadiusOverflowError
from settings import EntropySettings

logger = logging.getLogger(__name__)

Surface = Union[Profile, MeridianCurve, ConeSpec]

SMALL_BESSEL_ARGUMENT = 1e-6
SEARCH_EDGE = 1e-3


@dataclass
class EntropyReport:
    """Максимум гауссовой площади по растяжениям и сдвигам"""
    lam: float
    f_identity: float
    argmax_scale: float
    argmax_center: Tuple[float, float]
    quad_error: float
    search_radius: float
    boundary_hit: bool = False
    conical_limit: bool = False
    evaluations: int = 0

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data['lambda'] = data.pop('lam')
        data['argmax_center'] = list(self.argmax_center)
        return data


@dataclass(frozen=True)
class AreaBracket:
    value: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class TailModel:
    """Асимптотика u = tau r + c/r за пределами сетки с огибающей D/r^3 + sigma r"""
    tau: float
    c: float
    D: float
    sigma: float

    def height(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.tau * r + self.c / r, self.D / r ** 3 + self.sigma * r

    def slope(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.tau - self.c / r ** 2, 3.0 * self.D / r ** 4 + self.sigma


def sphere_area_norm(n: int) -> float:
    """(4pi)^{-n/2} |S^{n-1}| = 2^{1-n}/Gamma(n/2)"""
    return 2.0 ** (1 - n) / math.gamma(n / 2.0)


def sphere_gaussian_area(R: float, n: int) -> float:
    """F круглой сферы радиуса R в R^{n+1} с центром в начале координат"""
    sphere_measure = 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)
    return (4.0 * math.pi) ** (-n / 2.0) * sphere_measure * R ** n * math.exp(-R ** 2 / 4.0)


def fit_tail_model(p: Profile) -> TailModel:
    """Подгонка асимптотики по хвостовой половине сетки"""
    r, u = p.r, p.u
    tail = r >= r[-1] / 2.0
    rt, ut = r[tail], u[tail]
    if p.grid.r_max >= 10.0:
        estimate = estimate_trace(p)
        tau, sigma = estimate.value, estimate.spread
    else:
        tau = float(np.linalg.lstsq(np.column_stack([rt, 1.0 / rt]), ut, rcond=None)[0][0])
        sigma = 0.0
    c = float(np.sum((ut - tau * rt) / rt) / np.sum(1.0 / rt ** 2))
    D = float(np.max(np.abs(ut - tau * rt - c / rt) * rt ** 3))
    return TailModel(tau=tau, c=c, D=D, sigma=sigma)


def _cells(a: np.ndarray, b: np.ndarray, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Узлы и веса Гаусса-Лежандра на наборе ячеек [a_i, b_i]"""
    x, w = np.polynomial.legendre.leggauss(points)
    half = (b - a) / 2.0
    mid = (a + b) / 2.0
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


def _uniform_cells(lo: float, hi: float, count: int, points: int) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, count + 1)
    return _cells(edges[:-1], edges[1:], points)


def _angular_factor(k: np.ndarray, n: int) -> np.ndarray:
    """Среднее exp(-k w_1) по S^{n-1}, умноженное на exp(-k)"""
    out = np.empty_like(k)
    small = k < SMALL_BESSEL_ARGUMENT
    out[small] = (1.0 + k[small] ** 2 / (2.0 * n)) * np.exp(-k[small])
    kb = k[~small]
    nu = n / 2.0 - 1.0
    out[~small] = np.exp(special.gammaln(n / 2.0) - nu * np.log(kb / 2.0)) * special.ive(nu, kb)
    return out


def _gaussian_factor(rho, z, n, scale, y_ax, y_off):
    k = scale * rho * y_off / 2.0
    return _angular_factor(k, n) * np.exp(-(scale * rho - y_off) ** 2 / 4.0
                                          - (scale * z + y_ax) ** 2 / 4.0)


class GaussianAreaIntegrator:
    """
    Квадратура гауссовой площади для профиля, меридиана или точного конуса.

    Ячейки вне гауссова окна |s x| in [|y| - cutoff, |y| + cutoff] не считаются,
    их вклад оценивается сверху и входит в скобку.
    """

    def __init__(self, settings: Optional[EntropySettings] = None):
        self.settings = settings or EntropySettings()
        self.evaluations = 0

    def bracket(self, surface: Surface, n: int, center: Tuple[float, float] = (0.0, 0.0),
                scale: float = 1.0, points: Optional[int] = None) -> AreaBracket:
        if not scale > 0:
            raise InvalidParameterError(f"масштаб должен быть > 0, получено {scale}", {'scale': scale})
        if int(n) != n or n < 2:
            raise InvalidParameterError(f"n должно быть целым >= 2, получено {n}")
        points = points or self.settings.gauss_points
        y_ax, y_off = float(center[0]), abs(float(center[1]))
        self.evaluations += 1
        if isinstance(surface, ConeSpec):
            scale = 1.0
            low, high, value = self._cone(surface, n, y_ax, y_off, points)
        elif isinstance(surface, MeridianCurve):
            low = high = value = self._meridian(surface, n, scale, y_ax, y_off, points)
        else:
            low, high, value = self._graph(surface, n, scale, y_ax, y_off, points)
        norm = sphere_area_norm(n) * scale ** n
        return AreaBracket(norm * value, norm * low, norm * high)

    def _window(self, scale: float, y_norm: float) -> Tuple[float, float]:
        cutoff = self.settings.window_cutoff
        return max(0.0, (y_norm - cutoff) / scale), (y_norm + cutoff) / scale

    def _outer_remainder(self, n, scale, y_norm, r_hi, slope_bound, radial_bound) -> float:
        """Оценка сверху вклада r > r_hi по огибающей W_max (kappa r)^{n-1} exp(-(s r - |y|)^2/4)"""
        def envelope(r):
            return r ** (n - 1) * math.exp(-(scale * r - y_norm) ** 2 / 4.0)
        tail, _ = integrate.quad(envelope, r_hi, np.inf, limit=200)
        return math.sqrt(1.0 + slope_bound ** 2) * radial_bound ** (n - 1) * tail

    def _inner_remainder(self, n, length, radius_bound, slope_bound) -> float:
        """Вклад отброшенных ячеек у оси, где |s x| < |y| - cutoff"""
        if length <= 0.0:
            return 0.0
        cutoff = self.settings.window_cutoff
        return math.sqrt(1.0 + slope_bound ** 2) * radius_bound ** (n - 1) * length * math.exp(-cutoff ** 2 / 4.0)

    def _cone(self, cone: ConeSpec, n, y_ax, y_off, points):
        slant = math.sqrt(1.0 + cone.tau ** 2)
        y_norm = math.hypot(y_ax, y_off)
        R_lo, R_hi = self._window(1.0, y_norm)
        r_lo, r_hi = R_lo / slant, R_hi / slant
        r, w = _uniform_cells(r_lo, r_hi, self.settings.window_cells, points)
        density = _gaussian_factor(r, cone.tau * r, n, 1.0, y_ax, y_off) * r ** (n - 1) * slant
        value = float(np.dot(w, density))
        dropped = (self._outer_remainder(n, slant, y_norm, r_hi, cone.tau, 1.0)
                   + self._inner_remainder(n, r_lo, R_lo, cone.tau))
        return value, value + dropped, value

    def _meridian(self, curve: MeridianCurve, n, scale, y_ax, y_off, points):
        rho_spline, z_spline = curve.splines()
        t, w = _cells(curve.param[:-1], curve.param[1:], points)
        rho = rho_spline(t)
        speed = np.hypot(rho_spline.derivative()(t), z_spline.derivative()(t))
        density = _gaussian_factor(rho, z_spline(t), n, scale, y_ax, y_off) * np.abs(rho) ** (n - 1) * speed
        return float(np.dot(w, density))

    def _graph(self, p: Profile, n, scale, y_ax, y_off, points):
        r_nodes = p.r
        y_norm = math.hypot(y_ax, y_off)
        _, r_hi = self._window(scale, y_norm)
        inner_edge = y_norm - self.settings.window_cutoff
        radius = np.hypot(r_nodes, p.u)
        slope_grid = float(np.max(np.abs(p.du)))

        cells = np.arange(r_nodes.size - 1)
        keep = cells[r_nodes[:-1] < r_hi]
        dropped = 0.0
        if inner_edge > 0.0:
            near = scale * np.maximum(radius[keep], radius[keep + 1]) < inner_edge
            length = float(np.sum(r_nodes[keep[near] + 1] - r_nodes[keep[near]]))
            dropped += self._inner_remainder(n, length, inner_edge / scale, slope_grid)
            keep = keep[~near]
        value = 0.0
        if keep.size:
            spline = p.interpolant()
            r, w = _cells(r_nodes[keep], r_nodes[keep + 1], points)
            z = spline(r)
            speed = np.sqrt(1.0 + spline.derivative()(r) ** 2)
            value = float(np.dot(w, _gaussian_factor(r, z, n, scale, y_ax, y_off) * r ** (n - 1) * speed))

        r_max = p.grid.r_max
        low = high = value
        if r_hi > r_max:
            model = fit_tail_model(p)
            r, w = _uniform_cells(r_max, r_hi, self.settings.tail_cells, points)
            z, dz = model.height(r)
            s, ds = model.slope(r)
            mid = _gaussian_factor(r, z, n, scale, y_ax, y_off) * np.sqrt(1.0 + s ** 2)
            weight = r ** (n - 1)
            value += float(np.dot(w, mid * weight))

            peak = -y_ax / scale
            g_low = np.minimum(_gaussian_factor(r, z - dz, n, scale, y_ax, y_off),
                               _gaussian_factor(r, z + dz, n, scale, y_ax, y_off))
            g_high = _gaussian_factor(r, np.clip(peak, z - dz, z + dz), n, scale, y_ax, y_off)
            w_low = np.sqrt(1.0 + np.maximum(0.0, np.abs(s) - ds) ** 2)
            w_high = np.sqrt(1.0 + (np.abs(s) + ds) ** 2)
            low += float(np.dot(w, g_low * w_low * weight))
            high += float(np.dot(w, g_high * w_high * weight))

            slope_bound = abs(model.tau) + abs(model.c) / r_max ** 2 + 3.0 * model.D / r_max ** 4 + model.sigma
            radial_bound = math.sqrt(1.0 + slope_bound ** 2)
            dropped += self._outer_remainder(n, scale, y_norm, r_hi, slope_bound, radial_bound)
        else:
            beyond = r_nodes >= r_hi
            ratio = float(np.max(radius[beyond] / r_nodes[beyond])) if np.any(beyond) else 1.0
            dropped += self._outer_remainder(n, scale, y_norm, r_hi, slope_grid, max(ratio, 1.0))
        return low, high + dropped, value


def gaussian_area_bracket(surface: Surface, n: int, center: Tuple[float, float] = (0.0, 0.0),
                          scale: float = 1.0,
                          settings: Optional[EntropySettings] = None) -> AreaBracket:
    """F[scale*Sigma + y] с нижней и верхней оценками"""
    return GaussianAreaIntegrator(settings).bracket(surface, n, center, scale)


def gaussian_area(surface: Surface, n: int, center: Tuple[float, float] = (0.0, 0.0),
                  scale: float = 1.0, settings: Optional[EntropySettings] = None) -> float:
    """
    Гауссова площадь F[scale*Sigma + y], center = (y_axial, y_offaxis).
    Ширина сертифицированной скобки сверх допуска - ошибка.
    """
    settings = settings or EntropySettings()
    bracket = GaussianAreaIntegrator(settings).bracket(surface, n, center, scale)
    if bracket.width > settings.bracket_tolerance * max(1.0, bracket.value):
        raise QuadratureToleranceError(
            f"ширина скобки {bracket.width:.3e} превышает допуск {settings.bracket_tolerance:.1e}",
            {'value': bracket.value, 'lower': bracket.lower, 'upper': bracket.upper})
    return bracket.value


def _center_grid(radius: float) -> np.ndarray:
    """0, +-0.25, +-0.5, ... (удвоением) в пределах radius"""
    steps = []
    value = 0.25
    while value <= radius * (1.0 + 1e-12):
        steps.append(value)
        value *= 2.0
    steps = np.array(steps)
    return np.concatenate((-steps[::-1], [0.0], steps))


def _quadrature_error(integrator: GaussianAreaIntegrator, surface: Surface, n: int,
                      center: Tuple[float, float], scale: float) -> float:
    settings = integrator.settings
    fine = integrator.bracket(surface, n, center, scale, points=settings.gauss_points)
    coarse = integrator.bracket(surface, n, center, scale, points=settings.check_points)
    return abs(fine.value - coarse.value) + fine.width


class _EntropySearch:
    """Сетка по параметрам и затем Nelder-Mead с посевом из лучших узлов"""

    def __init__(self, integrator: GaussianAreaIntegrator, surface: Surface, n: int, seed: int):
        self.integrator = integrator
        self.surface = surface
        self.n = n
        self.rng = np.random.default_rng(seed)

    def area(self, scale: float, y_ax: float, y_off: float) -> float:
        return self.integrator.bracket(self.surface, self.n, (y_ax, y_off), scale).value

    def run(self, candidates: List[np.ndarray], decode, bounds) -> Tuple[np.ndarray, float]:
        settings = self.integrator.settings
        values = [self.area(*decode(x)) for x in candidates]
        order = np.argsort(values)[::-1]
        best_x, best_f = candidates[order[0]], values[order[0]]
        seeds = [candidates[i] for i in order[:1 + settings.restarts]]
        span = np.array([hi - lo for lo, hi in bounds])
        for i, x0 in enumerate(seeds):
            start = x0 if i == 0 else np.clip(x0 + 0.05 * span * self.rng.standard_normal(x0.size),
                                              [b[0] for b in bounds], [b[1] for b in bounds])
            result = optimize.minimize(lambda x: -self.area(*decode(x)), start, method='Nelder-Mead',
                                       bounds=bounds,
                                       options={'xatol': settings.xatol, 'fatol': settings.fatol,
                                                'maxfev': settings.max_evaluations})
            if -result.fun > best_f:
                best_x, best_f = result.x, float(-result.fun)
        return np.asarray(best_x, dtype=float), best_f


def _search_edges(log_scale: float, center: Tuple[float, float], log_bounds: Tuple[float, float],
                  radius: float) -> Tuple[bool, bool]:
    """
    (boundary_hit, conical_limit). Нижняя граница растяжения - это приближение
    к асимптотическому конусу и границей области поиска не считается.
    """
    log_lo, log_hi = log_bounds
    conical_limit = bool(log_scale - log_lo < SEARCH_EDGE)
    boundary_hit = bool(log_hi - log_scale < SEARCH_EDGE
                        or math.hypot(*center) > radius * (1.0 - SEARCH_EDGE))
    return boundary_hit, conical_limit


def entropy_of_profile(p: Union[Profile, MeridianCurve], n: int,
                       settings: Optional[EntropySettings] = None, seed: int = 0) -> EntropyReport:
    """
    lambda = sup по s > 0 и y гауссовой площади F[s*Sigma + y].
    По симметрии центр ищется в полуплоскости (y_axial, y_offaxis >= 0).
    """
    settings = settings or EntropySettings()
    integrator = GaussianAreaIntegrator(settings)
    search = _EntropySearch(integrator, p, n, seed)
    radius = settings.initial_radius
    log_lo, log_hi = math.log(settings.scale_bounds[0]), math.log(settings.scale_bounds[1])

    axial = _center_grid(min(radius, 2.0))
    offaxis = axial[axial >= 0.0]
    candidates = [np.array([ls, ya, yo]) for ls in np.linspace(log_lo, log_hi, 9)
                  for ya in axial for yo in offaxis]
    bounds = [(log_lo, log_hi), (-radius, radius), (0.0, radius)]

    def decode(x):
        return math.exp(x[0]), x[1], x[2]

    best_x, best_f = search.run(candidates, decode, bounds)
    f_identity = search.area(1.0, 0.0, 0.0)
    scale, y_ax, y_off = decode(best_x)
    lam = max(best_f, f_identity)
    if f_identity >= best_f:
        scale, y_ax, y_off = 1.0, 0.0, 0.0

    boundary_hit, conical_limit = _search_edges(math.log(scale), (y_ax, y_off),
                                                (log_lo, log_hi), radius)
    quad_error = _quadrature_error(integrator, p, n, (y_ax, y_off), scale)
    report = EntropyReport(lam=lam, f_identity=f_identity, argmax_scale=scale,
                           argmax_center=(y_ax, y_off), quad_error=quad_error,
                           search_radius=radius, boundary_hit=boundary_hit,
                           conical_limit=conical_limit, evaluations=integrator.evaluations)
    if boundary_hit:
        logger.info(f"Максимум энтропии на границе области поиска: s={scale:.3g}, y=({y_ax:.3g}, {y_off:.3g})")
    elif conical_limit:
        logger.info(f"Максимум при наименьшем растяжении s={scale:.3g}: профиль близок к своему конусу")
    logger.info(f"Энтропия профиля: lambda={lam:.10f}, F(id)={f_identity:.10f}, "
                f"ошибка квадратуры {quad_error:.2e}")
    return report


def _shell_maximum(search: _EntropySearch, radius: float, directions: int) -> float:
    angles = np.linspace(0.0, math.pi, directions)
    return max(search.area(1.0, radius * math.cos(a), radius * math.sin(a)) for a in angles)


def cone_entropy(cone: ConeSpec, settings: Optional[EntropySettings] = None,
                 seed: int = 0) -> EntropyReport:
    """
    lambda[C] = sup_y F[C + y]: конус инвариантен относительно растяжений,
    поэтому ищется только сдвиг. Радиус шара поиска удваивается, пока на
    граничной оболочке F не станет меньше 1 + eps_bd.
    """
    settings = settings or EntropySettings()
    if cone.is_flat:
        return EntropyReport(lam=1.0, f_identity=1.0, argmax_scale=1.0, argmax_center=(0.0, 0.0),
                             quad_error=settings.eps_bd, search_radius=0.0)

    integrator = GaussianAreaIntegrator(settings)
    search = _EntropySearch(integrator, cone, cone.n, seed)
    radius = settings.initial_radius
    while True:
        shell = _shell_maximum(search, radius, settings.shell_directions)
        if shell < 1.0 + settings.eps_bd:
            break
        if radius * 2.0 > settings.max_radius:
            raise SearchRadiusOverflowError(
                f"F на оболочке радиуса {radius:g} равно {shell:.6f} >= 1 + eps_bd",
                {'radius': radius, 'shell_max': shell, 'tau': cone.tau})
        radius *= 2.0
    logger.debug(f"Радиус поиска для tau={cone.tau}: {radius:g} (макс. на оболочке {shell:.6f})")

    axial = _center_grid(radius)
    candidates = [np.array([ya, yo]) for ya in axial for yo in axial[axial >= 0.0]
                  if math.hypot(ya, yo) <= radius]
    bounds = [(-radius, radius), (0.0, radius)]

    def decode(x):
        return 1.0, x[0], x[1]

    best_x, best_f = search.run(candidates, decode, bounds)
    f_identity = search.area(1.0, 0.0, 0.0)
    y_ax, y_off = float(best_x[0]), float(best_x[1])
    quad_error = _quadrature_error(integrator, cone, cone.n, (y_ax, y_off), 1.0)
    quad_error = max(quad_error, 1.0 + settings.eps_bd - best_f)
    logger.info(f"Энтропия конуса tau={cone.tau}: lambda={best_f:.10f}, y=({y_ax:.4f}, {y_off:.4f})")
    return EntropyReport(lam=best_f, f_identity=f_identity, argmax_scale=1.0,
                         argmax_center=(y_ax, y_off), quad_error=quad_error, search_radius=radius,
                         boundary_hit=math.hypot(y_ax, y_off) > radius * (1.0 - SEARCH_EDGE),
                         evaluations=integrator.evaluations)


def area_within_ball(p: Profile, n: int, R: float, points: int = 8) -> float:
    """H^n(Sigma пересечь B_R) = |S^{n-1}| int_{|x|<R} W r^{n-1} dr"""
    radius = np.hypot(p.r, p.u)
    if R <= radius[0]:
        return 0.0
    if np.any(np.diff(radius) <= 0):
        raise InvalidParameterError("|x| должен возрастать вдоль профиля")
    spline = p.interpolant()
    last = int(np.searchsorted(radius, R, side='right')) - 1
    r_end = p.r[-1]
    if last < radius.size - 1:
        lo, hi = p.r[last], p.r[last + 1]
        r_end = optimize.brentq(lambda x: math.hypot(x, float(spline(x))) - R, lo, hi, xtol=1e-14)
    edges = p.r[:last + 1]
    if r_end > edges[-1]:
        edges = np.append(edges, r_end)
    if edges.size < 2:
        return 0.0
    r, w = _cells(edges[:-1], edges[1:], points)
    speed = np.sqrt(1.0 + spline.derivative()(r) ** 2)
    measure = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return measure * float(np.dot(w, speed * r ** (n - 1)))


def area_ratio_constant(n: int) -> float:
    """M = (4pi)^{n/2} e^{1/4}"""
    return (4.0 * math.pi) ** (n / 2.0) * math.exp(0.25)


def area_ratio_check(p: Profile, n: int, lam: float, radii: Optional[Sequence[float]] = None,
                     count: int = 20) -> CheckReport:
    """Отношение H^n(Sigma пересечь B_R) / (M lambda R^n) должно быть <= 1 на всех радиусах"""
    radius = np.hypot(p.r, p.u)
    if radii is None:
        R_hi = radius[-1] * (1.0 - 1e-9)
        radii = np.geomspace(max(R_hi / 100.0, radius[0] * 1.001 + 1e-12), R_hi, count)
    M = area_ratio_constant(n)
    ratios = np.array([area_within_ball(p, n, R) / (M * lam * R ** n) for R in radii])
    worst = float(np.max(ratios))
    details = {'radii': [float(R) for R in radii], 'ratios': ratios.tolist(), 'M': M, 'lambda': lam}
    logger.info(f"Отношение площадей: максимум {worst:.6f} на {len(ratios)} радиусах")
    return CheckReport(name='area_ratio', sup_residual=worst, tolerance=1.0, order_estimate=float('nan'),
                       method='quadrature', notes='H^n(B_R)/(M lambda R^n)', details=details)


def entropy_sweep(n: int, taus: Sequence[float], settings: Optional[EntropySettings] = None,
                  seed: int = 0) -> pd.DataFrame:
    """Таблица tau, lambda, quad_error для конусов"""
    rows = []
    for tau in taus:
        report = cone_entropy(ConeSpec(n, float(tau)), settings, seed)
        rows.append({'tau': float(tau), 'lambda': report.lam, 'quad_error': report.quad_error})
    return pd.DataFrame(rows, columns=['tau', 'lambda', 'quad_error'])


def entropy_continuity_experiment(n: int, tau_seq: Sequence[float], tau_limit: float,
                                  settings: Optional[EntropySettings] = None,
                                  seed: int = 0) -> pd.DataFrame:
    """|lambda[C_{tau_i}] - lambda[C_tau]| для последовательности tau_i -> tau"""
    settings = settings or EntropySettings()
    limit = cone_entropy(ConeSpec(n, tau_limit), settings, seed)
    rows = []
    for tau in tau_seq:
        if tau == tau_limit:
            lam, err = limit.lam, limit.quad_error
        else:
            report = cone_entropy(ConeSpec(n, float(tau)), settings, seed)
            lam, err = report.lam, report.quad_error
        rows.append({'tau': float(tau), 'lambda': lam, 'difference': abs(lam - limit.lam), 'quad_error': err})
        logger.info(f"Непрерывность энтропии: tau={tau:.8f}, разность {rows[-1]['difference']:.3e}")
    return pd.DataFrame(rows, columns=['tau', 'lambda', 'difference', 'quad_error'])
