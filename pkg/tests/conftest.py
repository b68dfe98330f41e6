"""Общие фикстуры: панели модели данных с фиксированным seed и малые дизайны."""

import math
from pathlib import Path

import numpy as np
import pytest

import dpd_regression
from dpd_regression import DesignResponse
from sim_harness import SimConfig, gen_panel

PROJECT_DIR = Path(__file__).parent.parent.resolve()
DATA_DIR = PROJECT_DIR / "data"


def _normal_pdf(s):
    return np.exp(-0.5 * s * s) / math.sqrt(2.0 * math.pi)


def _normal_score(s):
    return -s


@pytest.fixture(scope="session")
def custom_normal():
    """Стандартная нормальная плотность, проведённая через путь квадратуры."""
    return dpd_regression.custom(_normal_pdf, _normal_score, name="normal_by_quadrature")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def sim_config():
    return SimConfig(t1=100, t2=20, reps=4, seed=12345)


@pytest.fixture(scope="session")
def pure_panel(sim_config):
    panel, _ = gen_panel(sim_config, 0)
    return panel


@pytest.fixture(scope="session")
def pure_design(pure_panel):
    return pure_panel.pre_design()


@pytest.fixture
def random_design(rng):
    """100×3 дизайн с интерсептом и откликом y = Xβ + N(0, 0.5²)."""
    X = np.column_stack([np.ones(100), rng.normal(size=(100, 2))])
    y = X @ np.array([0.5, -1.0, 2.0]) + 0.5 * rng.standard_normal(100)
    return DesignResponse(X, y)


@pytest.fixture(scope="session")
def fixture_csv():
    return str(DATA_DIR / "gdp_fixture.csv")


@pytest.fixture(scope="session")
def fixture_schema():
    return str(DATA_DIR / "gdp_schema.json")
