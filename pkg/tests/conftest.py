import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qphase.grid import Grid
from qphase.states import StateSpec, default_grid, realize

settings.register_profile("default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def coherent():
    spec = StateSpec("coherent3d")
    return realize(spec, default_grid(spec))


@pytest.fixture(scope="session")
def well2():
    spec = StateSpec("well1d", n=2)
    return realize(spec, default_grid(spec))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def line():
    return Grid((256,), (-10.0,), (10.0,))
