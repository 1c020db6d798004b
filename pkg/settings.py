# -*- coding: utf-8 -*-
"""Конфигурация лаборатории: значения по умолчанию, config.json, переменные окружения"""

import json
import logging
import os
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import ConfigError

logger = logging.getLogger(__name__)

OUT_ENV_VAR = "EXPANDERLAB_OUT"


class _Block(BaseModel):
    """Общий предок блоков: неизвестные ключи запрещены"""
    model_config = ConfigDict(extra='forbid', validate_assignment=True)


class GridSettings(_Block):
    nodes: int = Field(2048, ge=16, description="число интервалов сетки N")
    r_max: float = Field(40.0, gt=0.0, description="внешний радиус сетки")
    stretch: float = Field(1.0, ge=1.0, description="отношение соседних шагов")


class SolverSettings(_Block):
    tol: float = Field(1e-10, gt=0.0, description="локальная точность интегратора")
    scan_tol: float = Field(1e-8, gt=0.0, description="точность интегратора при сканировании")
    root_xtol: float = Field(1e-12, gt=0.0, description="допуск корня по высоте на оси")
    slope_cap: float = Field(1e3, gt=0.0, description="предел |u'| графического режима")
    overshoot_factor: float = Field(4.0, gt=1.0, description="наклон перелёта в единицах tau")
    series_radius: float = Field(1e-3, gt=0.0, description="радиус старта ряда у оси")
    trace_tolerance: float = Field(1e-3, gt=0.0, description="допуск сходимости следа")
    slope_tolerance: float = Field(1e-6, gt=0.0, description="допуск ошибки наклона решения")
    residual_tolerance: float = Field(1e-3, gt=0.0, description="допуск невязки на сетке")
    scan_factors: List[float] = Field(
        default_factory=lambda: [2.0 ** k for k in range(-6, 4)],
        description="множители a/(tau*sqrt(n)) для сканирования",
    )
    fine_scan_points: int = Field(19, ge=3, description="точек в мелком сканировании")


class BoundaryMode(str, Enum):
    dirichlet = "dirichlet"
    neumann = "neumann"


class FlowSettings(_Block):
    cfl: float = Field(0.4, gt=0.0, le=1.0)
    boundary: BoundaryMode = BoundaryMode.dirichlet
    t_end: float = Field(1.0, gt=0.0)
    eps: float = Field(1e-3, gt=0.0, description="параметр сглаживания конуса")
    slope_cap: float = Field(50.0, gt=0.0)
    dt_min: float = Field(1e-14, gt=0.0)
    snapshot_times: List[float] = Field(default_factory=lambda: [0.5, 1.0])
    log_every: int = Field(5000, ge=1)


class EntropySettings(_Block):
    eps_bd: float = Field(1e-4, gt=0.0, description="уровень 1+eps на граничной оболочке")
    shell_directions: int = Field(64, ge=8)
    initial_radius: float = Field(4.0, gt=0.0)
    max_radius: float = Field(1024.0, gt=0.0)
    gauss_points: int = Field(8, ge=2)
    check_points: int = Field(5, ge=2)
    window_cutoff: float = Field(13.6, gt=0.0, description="радиус окна гауссиана")
    tail_cells: int = Field(256, ge=8)
    window_cells: int = Field(512, ge=8)
    scale_bounds: Tuple[float, float] = (1e-3, 10.0)
    restarts: int = Field(2, ge=0)
    xatol: float = Field(1e-7, gt=0.0)
    fatol: float = Field(1e-12, gt=0.0)
    max_evaluations: int = Field(4000, ge=10)
    identity_tolerance: float = Field(1e-3, gt=0.0)
    bracket_tolerance: float = Field(1e-4, gt=0.0)

    @field_validator('scale_bounds')
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not 0.0 < value[0] < value[1]:
            raise ValueError("scale_bounds должны удовлетворять 0 < min < max")
        return value


class AnalysisSettings(_Block):
    inner_fraction: float = Field(0.8, gt=0.0, le=1.0)
    ratio_tolerance: float = Field(1e-3, ge=0.0)
    drift_tolerance: float = Field(1e-4, gt=0.0)
    subsolution_tolerance: float = Field(1e-4, gt=0.0)
    h_identity_tolerance: float = Field(1e-4, gt=0.0)
    area_radii: int = Field(20, ge=2)
    decay_stability: float = Field(0.05, gt=0.0)
    window_angles: int = Field(64, ge=8)


class ExperimentSettings(_Block):
    experiment: str = "compactness"
    tau_limit: float = Field(1.0, gt=0.0)
    tau_count: int = Field(10, ge=1)
    r_window: float = Field(10.0, gt=0.0)
    tau_interval: Tuple[float, float] = (0.25, 4.0)
    samples: int = Field(9, ge=2)
    eps_list: List[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])


class OutputSettings(_Block):
    out_dir: str = "output"
    float_format: str = "%.17g"


class LoggingSettings(_Block):
    enabled: bool = True
    log_file: str = "expanderlab.log"
    level: str = "INFO"

    @field_validator('level')
    @classmethod
    def _known_level(cls, value: str) -> str:
        if value.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(f"неизвестный уровень логирования: {value}")
        return value.upper()


class Command(str, Enum):
    solve = "solve"
    evolve = "evolve"
    entropy = "entropy"
    verify = "verify"
    sweep = "sweep"
    pipeline = "pipeline"
    plot = "plot"


class RunConfig(_Block):
    """Полная конфигурация одного запуска"""
    command: Command = Command.solve
    n: int = Field(2, ge=2)
    tau: float = Field(1.0, ge=0.0)
    theta0: float = Field(0.7853981633974483, gt=0.0)
    t_cut: Optional[float] = Field(None, ge=0.0)
    input: Optional[str] = None
    kind: Optional[str] = None
    jobs: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    seed: int = 0
    grid: GridSettings = Field(default_factory=GridSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    flow: FlowSettings = Field(default_factory=FlowSettings)
    entropy: EntropySettings = Field(default_factory=EntropySettings)
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)
    experiments: ExperimentSettings = Field(default_factory=ExperimentSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @model_validator(mode='after')
    def _theta_range(self) -> 'RunConfig':
        if not self.theta0 < 3.141592653589793:
            raise ValueError("theta0 должен лежать в (0, pi)")
        return self


DEFAULT_CONFIG: Dict[str, Any] = RunConfig(jobs=1).model_dump(mode='json')


def update_config_dict(default: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
    """Рекурсивное обновление конфигурации"""
    for key, value in user.items():
        if key in default and isinstance(default[key], dict) and isinstance(value, dict):
            update_config_dict(default[key], value)
        else:
            default[key] = value
    return default


def load_config(config_path: Optional[str] = "config.json",
                overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Загрузка конфигурации: умолчания <- config.json <- overrides <- окружение"""
    load_dotenv()
    merged = json.loads(json.dumps(DEFAULT_CONFIG))
    merged.pop('jobs', None)

    if config_path and os.path.exists(config_path):
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                user_config = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Ошибка в формате JSON файла {config_path}: {e}",
                              {'path': config_path}) from e
        update_config_dict(merged, user_config)
        logger.info(f"Конфигурация загружена из {config_path}")
    elif config_path:
        logger.info(f"Файл конфигурации {config_path} не найден, используются настройки по умолчанию")

    if overrides:
        update_config_dict(merged, overrides)

    env_out = os.getenv(OUT_ENV_VAR)
    if env_out and not (overrides or {}).get('output', {}).get('out_dir'):
        merged.setdefault('output', {})['out_dir'] = env_out

    return RunConfig.model_validate(merged)


def setup_logging(config: LoggingSettings) -> None:
    """Настройка логирования"""
    if logging.getLogger().handlers:
        return
    if config.enabled:
        logging.basicConfig(
            level=getattr(logging, config.level),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(config.log_file, encoding='utf-8'),
                logging.StreamHandler()
            ]
        )
    else:
        logging.basicConfig(level=logging.WARNING, handlers=[logging.StreamHandler()])
    logger.info("Логирование инициализировано")
