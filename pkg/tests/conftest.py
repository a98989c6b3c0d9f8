import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ucabeam.formats import load_scenario

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def table1():
    return load_scenario("table1.scenario")


@pytest.fixture(scope="session")
def table1_channel(table1):
    return table1.synthesize()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def deg(x):
    return math.radians(x)


@pytest.fixture(scope="session")
def table1_ci(table1):
    """Reduced three-path scene: 180 elements, 250 frequency points."""
    from ucabeam.scene import FrequencyGrid, UcaGeometry, synthesize_channel

    g = UcaGeometry(0.5, 180)
    grid = FrequencyGrid(28e9, 30e9, 250)
    return synthesize_channel(g, grid, table1.truths)
