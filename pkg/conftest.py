# -*- coding: utf-8 -*-
"""Общие фикстуры тестов"""

import json
import os

import numpy as np
import pytest

from core import ConeSpec, Profile, cone_profile, make_radial_grid
from expander_ode import shoot

FIXTURES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')

# справочные материалы не входят в набор тестов
collect_ignore = ['examples']


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: длительные численные эксперименты")
    config.addinivalue_line("markers", "convergence: исследования порядка сходимости")


@pytest.fixture(scope='session')
def derived():
    with open(os.path.join(FIXTURES_DIR, 'derived_values.json'), 'r', encoding='utf-8') as f:
        return json.load(f)


@pytest.fixture(scope='session')
def expander_n2():
    """Экспандер n=2, tau=1 на сетке по умолчанию (2048 интервалов, r_max=40)"""
    return shoot(2, 1.0)


@pytest.fixture
def small_grid():
    return make_radial_grid(256, 16.0)


@pytest.fixture
def plane(small_grid):
    zeros = np.zeros_like(small_grid.nodes)
    return Profile(small_grid, zeros, zeros, {'kind': 'samples'})


@pytest.fixture
def cone_n2(small_grid):
    return cone_profile(ConeSpec(2, 1.0), small_grid)
