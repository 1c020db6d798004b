# -*- coding: utf-8 -*-
"""Тесты загрузки конфигурации и структуры ошибок"""

import json
import os

import pytest
from pydantic import ValidationError

from errors import BracketError, ConfigError, PastExtinctionError, StageError
from settings import (DEFAULT_CONFIG, OUT_ENV_VAR, Command, EntropySettings, RunConfig,
                      load_config, update_config_dict)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv(OUT_ENV_VAR, raising=False)


def _write(tmp_path, data, name='config.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)


class TestLoadConfig:
    def test_defaults_without_file(self, tmp_path):
        config = load_config(str(tmp_path / 'absent.json'))
        assert config.command == Command.solve
        assert config.grid.nodes == 2048
        assert config.grid.r_max == 40.0
        assert config.jobs >= 1

    def test_partial_block_is_merged(self, tmp_path):
        config = load_config(_write(tmp_path, {'grid': {'nodes': 512}}))
        assert config.grid.nodes == 512
        assert config.grid.r_max == 40.0
        assert config.solver.tol == 1e-10

    def test_overrides_win_over_file(self, tmp_path):
        path = _write(tmp_path, {'tau': 2.0, 'flow': {'eps': 0.1}})
        config = load_config(path, {'tau': 0.5, 'command': 'evolve'})
        assert config.tau == 0.5
        assert config.flow.eps == 0.1
        assert config.command == Command.evolve

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(_write(tmp_path, {'grid': {'cells': 10}}))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"grid": ', encoding='utf-8')
        with pytest.raises(ConfigError) as info:
            load_config(str(path))
        assert info.value.details['path'] == str(path)

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path / 'env_out'))
        assert load_config(None).output.out_dir == str(tmp_path / 'env_out')
        explicit = load_config(None, {'output': {'out_dir': 'flag_out'}})
        assert explicit.output.out_dir == 'flag_out'

    def test_repository_config_matches_defaults(self):
        config = load_config(os.path.join(os.path.dirname(__file__), 'config.json'))
        assert config.model_dump(mode='json', exclude={'jobs'}) == \
            {key: value for key, value in DEFAULT_CONFIG.items() if key != 'jobs'}


class TestValidation:
    def test_theta0_below_pi(self):
        with pytest.raises(ValidationError):
            RunConfig(theta0=3.2)

    def test_dimension(self):
        with pytest.raises(ValidationError):
            RunConfig(n=1)

    def test_scale_bounds_ordered(self):
        with pytest.raises(ValidationError):
            EntropySettings(scale_bounds=(2.0, 1.0))

    def test_logging_level_normalised(self):
        assert RunConfig(logging={'level': 'debug'}).logging.level == 'DEBUG'
        with pytest.raises(ValidationError):
            RunConfig(logging={'level': 'loud'})

    def test_boundary_mode(self):
        assert RunConfig(flow={'boundary': 'neumann'}).flow.boundary.value == 'neumann'
        with pytest.raises(ValidationError):
            RunConfig(flow={'boundary': 'periodic'})


def test_update_config_dict_is_recursive():
    default = {'a': 1, 'b': {'c': 2, 'd': 3}}
    update_config_dict(default, {'b': {'c': 5}, 'e': 6})
    assert default == {'a': 1, 'b': {'c': 5, 'd': 3}, 'e': 6}


class TestErrors:
    def test_stage_error_carries_cause(self):
        cause = PastExtinctionError("t >= T", {'T': 0.3})
        error = StageError('link_flow', cause)
        data = error.to_dict()
        assert data['kind'] == 'stage-failure'
        assert data['details'] == {'stage': 'link_flow', 'cause_kind': 'past-extinction'}
        assert error.cause is cause

    def test_bracket_error_keeps_scan(self):
        table = [{'a': 0.1, 'g': -1.0}]
        error = BracketError("нет смены знака", table)
        assert error.to_dict()['details']['scan_table'] == table
