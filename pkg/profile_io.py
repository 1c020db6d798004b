# -*- coding: utf-8 -*-
"""
Чтение и запись артефактов: профили (CSV r,u,du и JSON-конверт),
временные ряды потока (CSV t,r,u), таблицы и данные для gnuplot.
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from core import Profile, RadialGrid
from errors import InvalidParameterError, UnknownKindError

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ['r', 'u', 'du']
FLOW_COLUMNS = ['t', 'r', 'u']
PLOT_KINDS = ('profile', 'sweep', 'flow')
FLOAT_FORMAT = "%.17g"


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def write_json(data: Any, path: str) -> str:
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(_plain(data), f, ensure_ascii=False, indent=2)
    logger.debug(f"JSON сохранён: {path}")
    return path


def read_json(path: str) -> Any:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def _grid_from_nodes(r: np.ndarray) -> RadialGrid:
    steps = np.diff(r)
    stretch = max(1.0, float(np.max(steps[1:] / steps[:-1]))) if steps.size > 1 else 1.0
    # равномерная сетка после округления при записи
    if stretch < 1.0 + 1e-9:
        stretch = 1.0
    return RadialGrid(r, stretch)


def profile_to_dict(p: Profile) -> Dict[str, Any]:
    return {
        'kind': 'profile',
        'meta': _plain(p.meta),
        'stretch': p.grid.stretch,
        'r': p.r.tolist(),
        'u': p.u.tolist(),
        'du': p.du.tolist(),
    }


def profile_from_dict(data: Dict[str, Any]) -> Profile:
    if data.get('kind') != 'profile':
        raise InvalidParameterError(f"ожидался конверт профиля, получено '{data.get('kind')}'")
    grid = RadialGrid(np.array(data['r'], dtype=float), float(data.get('stretch', 1.0)))
    return Profile(grid, data['u'], data['du'], data.get('meta', {}))


def write_profile_csv(p: Profile, path: str, float_format: str = FLOAT_FORMAT) -> str:
    """CSV с колонками r,u,du"""
    _ensure_parent(path)
    frame = pd.DataFrame({'r': p.r, 'u': p.u, 'du': p.du}, columns=PROFILE_COLUMNS)
    frame.to_csv(path, index=False, float_format=float_format)
    logger.info(f"Профиль сохранён: {path} ({p.grid.N + 1} узлов)")
    return path


def read_profile_csv(path: str, meta: Optional[Dict[str, Any]] = None) -> Profile:
    """Профиль из CSV r,u[,du]; без du производная берётся разностями"""
    if not os.path.exists(path):
        raise InvalidParameterError(f"файл профиля не найден: {path}", {'path': path})
    frame = pd.read_csv(path, float_precision='round_trip')
    missing = [name for name in ('r', 'u') if name not in frame.columns]
    if missing:
        raise InvalidParameterError(f"в {path} нет колонок {missing}", {'columns': list(frame.columns)})
    grid = _grid_from_nodes(frame['r'].to_numpy(dtype=float))
    u = frame['u'].to_numpy(dtype=float)
    meta = dict(meta or {})
    meta.setdefault('source', path)
    if 'du' in frame.columns:
        du = frame['du'].to_numpy(dtype=float).copy()
        du[0] = 0.0
        meta.setdefault('kind', 'samples')
        return Profile(grid, u, du, meta)
    du = np.gradient(u, grid.nodes, edge_order=2)
    du[0] = 0.0
    meta.setdefault('kind', 'samples')
    meta.setdefault('du_method', 'finite-difference')
    return Profile(grid, u, du, meta)


def write_flow_csv(snapshots, path: str, float_format: str = FLOAT_FORMAT) -> str:
    """Длинная таблица t,r,u по сохранённым снимкам потока"""
    _ensure_parent(path)
    frames = [pd.DataFrame({'t': np.full(p.r.size, t), 'r': p.r, 'u': p.u}, columns=FLOW_COLUMNS)
              for t, p in snapshots]
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format=float_format)
    logger.info(f"Временной ряд потока сохранён: {path} ({len(frames)} снимков)")
    return path


def read_table_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, float_precision='round_trip')


def write_table_csv(frame: pd.DataFrame, path: str, float_format: str = FLOAT_FORMAT) -> str:
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=float_format)
    return path


def _write_columns(handle, frame: pd.DataFrame, columns):
    values = frame[columns].to_numpy(dtype=float)
    np.savetxt(handle, values, fmt='%.17g')


def emit_plot_data(artifact_path: str, kind: str, out_path: Optional[str] = None) -> str:
    """
    Данные для gnuplot: колонки через пробел с комментарием-заголовком.
    profile -> r u; sweep -> parameter distance; flow -> блоки по t через пустую строку.
    """
    if kind not in PLOT_KINDS:
        raise UnknownKindError(f"неизвестный вид данных '{kind}', ожидается один из {PLOT_KINDS}",
                               {'kind': kind})
    if not os.path.exists(artifact_path):
        raise InvalidParameterError(f"артефакт не найден: {artifact_path}", {'path': artifact_path})
    out_path = out_path or os.path.splitext(artifact_path)[0] + '.dat'
    frame = read_table_csv(artifact_path)
    columns = {'profile': ['r', 'u'], 'sweep': ['parameter', 'distance'], 'flow': ['r', 'u']}[kind]
    missing = [name for name in columns + (['t'] if kind == 'flow' else []) if name not in frame.columns]
    if missing:
        raise InvalidParameterError(f"в {artifact_path} нет колонок {missing} для вида '{kind}'")

    _ensure_parent(out_path)
    with open(out_path, 'w', encoding='utf-8') as f:
        if kind == 'flow':
            f.write("# t r u\n")
            for t, block in frame.groupby('t', sort=True):
                f.write(f"# t = {t:.17g}\n")
                _write_columns(f, block.assign(t=t), ['t', 'r', 'u'])
                f.write("\n\n")
        else:
            f.write("# " + " ".join(columns) + "\n")
            _write_columns(f, frame, columns)
    logger.info(f"Данные для графика ({kind}) сохранены: {out_path}")
    return out_path
