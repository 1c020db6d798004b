# -*- coding: utf-8 -*-
"""
Командная строка лаборатории самоэкспандеров.

Подкоманды: solve, evolve, entropy, verify, sweep, pipeline, plot.
Коды выхода: 0 - успех, 1 - провал проверки или этапа, 2 - ошибка использования.
"""

import argparse
import logging
import math
import os
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from core import ConeSpec, Profile, estimate_trace, make_radial_grid
from entropy import cone_entropy, entropy_of_profile
from errors import (ConfigError, ExpanderLabError, InvalidParameterError, StageError,
                    UnknownKindError)
from expander_ode import ShootingResult, shoot
from experiments import battery_passed, existence_pipeline, run_experiment, verification_battery
from flow import FlowParams, evolve_radial_mcf, extinction_time, mollified_cone
from profile_io import (emit_plot_data, profile_from_dict, profile_to_dict, read_json,
                        read_profile_csv, write_flow_csv, write_json, write_profile_csv,
                        write_table_csv)
from reports import ReportWriter
from settings import DEFAULT_CONFIG, OUT_ENV_VAR, Command, RunConfig, load_config, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

USAGE_ERRORS = (ConfigError, UnknownKindError, InvalidParameterError)

# флаг -> (путь в конфигурации, тип, описание)
FLAGS = {
    '--n': (('n',), int, "размерность n базы R^n"),
    '--tau': (('tau',), float, "наклон конуса tau"),
    '--eps': (('flow', 'eps'), float, "параметр сглаживания конуса"),
    '--theta0': (('theta0',), float, "начальный полярный угол звена"),
    '--tcut': (('t_cut',), float, "время остановки потока звена (по умолчанию половина времени исчезновения)"),
    '--t-end': (('flow', 't_end'), float, "конечное время потока"),
    '--rmax': (('grid', 'r_max'), float, "внешний радиус сетки"),
    '--nodes': (('grid', 'nodes'), int, "число интервалов сетки"),
    '--stretch': (('grid', 'stretch'), float, "отношение соседних шагов сетки"),
    '--tol': (('solver', 'tol'), float, "локальная точность интегратора"),
    '--jobs': (('jobs',), int, "число процессов (по умолчанию число ядер)"),
    '--seed': (('seed',), int, "зерно случайных перезапусков оптимизатора"),
    '--boundary': (('flow', 'boundary'), str, "граничное условие потока: dirichlet или neumann"),
    '--out': (('output', 'out_dir'), str, f"каталог результатов (или переменная {OUT_ENV_VAR})"),
    '--input': (('input',), str, "входной артефакт (CSV или JSON профиля, таблица)"),
    '--kind': (('kind',), str, "вид входного профиля или данных графика"),
    '--experiment': (('experiments', 'experiment'), str, "эксперимент для sweep"),
}


def _default_for(path) -> Any:
    value: Any = DEFAULT_CONFIG
    for key in path:
        if not isinstance(value, dict) or key not in value:
            return None
        value = value[key]
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='expanderlab',
        description='Лаборатория вращательно-симметричных самоэкспандеров',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Примеры использования:
  python expanderlab.py solve --n 2 --tau 1.0
  python expanderlab.py evolve --n 2 --tau 1.0 --eps 1e-3
  python expanderlab.py verify --input output/profile.csv --n 2
  python expanderlab.py sweep --experiment compactness --jobs 4
  python expanderlab.py pipeline --n 2 --theta0 0.7853981633974483
  python expanderlab.py plot --input output/profile.csv --kind profile
        """
    )
    parser.add_argument('command', choices=[c.value for c in Command], help='подкоманда')
    parser.add_argument('--config', default='config.json',
                        help='Путь к конфигурационному файлу (по умолчанию: config.json)')
    for flag, (path, kind, text) in FLAGS.items():
        default = _default_for(path)
        help_text = f"{text} (по умолчанию: {default})" if default is not None else text
        parser.add_argument(flag, type=kind, default=None, dest='_'.join(path), help=help_text)
    return parser


def args_to_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {'command': args.command}
    for path, _, _ in FLAGS.values():
        value = getattr(args, '_'.join(path))
        if value is None:
            continue
        target = overrides
        for key in path[:-1]:
            target = target.setdefault(key, {})
        target[path[-1]] = value
    return overrides


def _print_usage_error(error: Exception):
    if isinstance(error, ValidationError):
        for item in error.errors():
            key = '.'.join(str(part) for part in item['loc'])
            print(f"❌ Неверный параметр '{key}': {item['msg']}")
        print("💡 Исправьте значение в config.json или соответствующим флагом командной строки")
    else:
        print(f"❌ {error}")
        print("💡 Проверьте параметры запуска: python expanderlab.py --help")


def _out(config: RunConfig, name: str) -> str:
    return os.path.join(config.output.out_dir, name)


def _grid(config: RunConfig):
    return make_radial_grid(config.grid.nodes, config.grid.r_max, config.grid.stretch)


def _load_profile(config: RunConfig) -> Profile:
    if not config.input:
        raise InvalidParameterError("нужен входной профиль: --input путь/к/profile.csv")
    if config.input.endswith('.json'):
        data = read_json(config.input)
        return profile_from_dict(data.get('profile', data))
    meta = {'kind': config.kind, 'n': config.n} if config.kind else None
    return read_profile_csv(config.input, meta)


def _result_from_profile(p: Profile, config: RunConfig) -> ShootingResult:
    """Результат стрельбы для готового профиля: tau из метаданных или по следу"""
    tau = p.meta.get('tau')
    if tau is None:
        tau = estimate_trace(p).value
        if abs(tau) < config.solver.trace_tolerance:
            tau = 0.0
    return ShootingResult(profile=p, a=float(p.u[0]), residual_sup=float('nan'),
                          slope_error=float('nan'), iterations=0, n=config.n, tau=float(tau))


def _command_solve(config: RunConfig) -> int:
    result = shoot(config.n, config.tau, grid=_grid(config), settings=config.solver)
    profile = result.profile.with_meta(tau=config.tau)
    csv_path = write_profile_csv(profile, _out(config, 'profile.csv'), config.output.float_format)
    write_json({'profile': profile_to_dict(profile), 'result': result.to_report(),
                'scan_table': result.scan_table}, _out(config, 'shooting.json'))
    print(f"✅ Экспандер найден: a = {result.a:.12g}")
    print(f"📊 Ошибка наклона: {result.slope_error:.2e}, невязка: {result.residual_sup:.2e}")
    print(f"📁 Профиль: {csv_path}")
    return EXIT_OK


def _command_evolve(config: RunConfig) -> int:
    grid = _grid(config)
    params = FlowParams.from_settings(config.flow)
    state = evolve_radial_mcf(mollified_cone(config.tau, config.flow.eps, grid), config.n,
                              config.flow.t_end, params)
    write_flow_csv(state.snapshots, _out(config, 'flow.csv'), config.output.float_format)
    write_profile_csv(state.profile, _out(config, 'flow_profile.csv'), config.output.float_format)
    write_json(state.summary(), _out(config, 'flow_state.json'))
    print(f"✅ Поток до t = {state.t:g}: {state.steps} шагов, dt = {state.dt_last:.3e}")
    print(f"📁 Временной ряд: {_out(config, 'flow.csv')}")
    return EXIT_OK


def _command_entropy(config: RunConfig) -> int:
    if config.input:
        report = entropy_of_profile(_load_profile(config), config.n, config.entropy, config.seed)
    else:
        report = cone_entropy(ConeSpec(config.n, config.tau), config.entropy, config.seed)
    write_json(report.to_dict(), _out(config, 'entropy.json'))
    print(f"✅ lambda = {report.lam:.10f} (ошибка квадратуры {report.quad_error:.1e})")
    if report.boundary_hit:
        print("⚠️ Максимум достигнут на границе области поиска")
    elif report.conical_limit:
        print("ℹ️ Максимум при наименьшем растяжении: поверхность близка к своему конусу")
    return EXIT_OK


def _command_verify(config: RunConfig) -> int:
    profile = _load_profile(config)
    result = _result_from_profile(profile, config)
    reports = verification_battery(result, config.n, config)
    writer = ReportWriter(config.output.out_dir, 'verify', config.output.float_format)
    writer.add_checks(reports, n=config.n, tau=result.tau, input=config.input)
    writer.write_all()
    writer.print_summary()
    return EXIT_OK if battery_passed(reports) else EXIT_FAILED


def _command_sweep(config: RunConfig) -> int:
    table = run_experiment(config)
    name = table.experiment
    write_table_csv(table.frame, _out(config, f"sweep_{name}.csv"), config.output.float_format)
    write_json(table.to_dict(), _out(config, f"sweep_{name}.json"))
    write_json(config.model_dump(mode='json'), _out(config, f"sweep_{name}_config.json"))
    print(f"{'✅' if table.passed else '❌'} Эксперимент {name}: {len(table.frame)} строк")
    print(f"📁 Таблица: {_out(config, f'sweep_{name}.csv')}")
    return EXIT_OK if table.passed else EXIT_FAILED


def _command_pipeline(config: RunConfig) -> int:
    t_cut = config.t_cut
    if t_cut is None:
        T = extinction_time(config.n, config.theta0)
        t_cut = T / 2.0 if math.isfinite(T) else 0.0
    try:
        dossier = existence_pipeline(config.n, config.theta0, t_cut, config)
    except StageError as e:
        dossier = {'n': config.n, 'theta0': config.theta0, 't_cut': t_cut, 'passed': False,
                   'failed_stage': e.stage, 'error': e.to_dict(),
                   'cause': getattr(e.cause, 'to_dict', lambda: {'message': str(e.cause)})()}
        write_json(dossier, _out(config, 'dossier.json'))
        print(f"❌ {e}")
        return EXIT_FAILED
    write_json(dossier, _out(config, 'dossier.json'))
    writer = ReportWriter(config.output.out_dir, 'pipeline', config.output.float_format)
    writer.add_records(dossier['checks'], n=config.n, theta0=config.theta0, t_cut=t_cut,
                       tau=dossier.get('tau'))
    writer.write_all()
    writer.print_summary()
    print(f"{'✅' if dossier['passed'] else '❌'} Досье: {_out(config, 'dossier.json')}")
    return EXIT_OK if dossier['passed'] else EXIT_FAILED


def _command_plot(config: RunConfig) -> int:
    if not config.input or not config.kind:
        raise InvalidParameterError("для plot нужны --input и --kind")
    path = emit_plot_data(config.input, config.kind)
    print(f"📁 Данные для графика: {path}")
    return EXIT_OK


COMMANDS = {
    Command.solve: _command_solve,
    Command.evolve: _command_evolve,
    Command.entropy: _command_entropy,
    Command.verify: _command_verify,
    Command.sweep: _command_sweep,
    Command.pipeline: _command_pipeline,
    Command.plot: _command_plot,
}


def run(config: RunConfig) -> int:
    """Выполнение команды из конфигурации; возвращает код выхода"""
    os.makedirs(config.output.out_dir, exist_ok=True)
    try:
        return COMMANDS[config.command](config)
    except USAGE_ERRORS as e:
        _print_usage_error(e)
        return EXIT_USAGE
    except ExpanderLabError as e:
        logger.error(f"{e.kind}: {e}")
        write_json({'command': config.command.value, 'error': e.to_dict()}, _out(config, 'error.json'))
        print(f"❌ {e.kind}: {e}")
        return EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args_to_overrides(args))
    except (ValidationError, ConfigError) as e:
        _print_usage_error(e)
        return EXIT_USAGE
    setup_logging(config.logging)
    logger.info(f"Команда {config.command.value}: n={config.n}, tau={config.tau}")
    return run(config)


if __name__ == '__main__':
    sys.exit(main())
