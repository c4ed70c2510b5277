import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qdcavity.config import load_config
from qdcavity.spectrum import sweep_temperature

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")

ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    """Remember one acceptance outcome for the terminal summary."""
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(str(k).rstrip("abcdefgh")), str(k))):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def exc(cfg):
    return cfg.exciton


@pytest.fixture(scope="session")
def cav(cfg):
    return cfg.cavity


@pytest.fixture(scope="session")
def cpl(cfg):
    return cfg.coupling


@pytest.fixture(scope="session")
def map0(cfg):
    """Noiseless zero-field temperature sweep with the reference parameters."""
    return sweep_temperature(cfg.exciton, cfg.temperature_tuning, cfg.cavity, cfg.coupling,
                             cfg.grid("T"), cfg.energy_grid(), 0.0, cfg.emphasis, cfg.resolution)


@pytest.fixture(scope="session")
def map1(cfg):
    """Noiseless 1 T temperature sweep."""
    return sweep_temperature(cfg.exciton, cfg.temperature_tuning, cfg.cavity, cfg.coupling,
                             cfg.grid("T"), cfg.energy_grid(), 1.0, cfg.emphasis, cfg.resolution)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
