import numpy as np
import pytest

from models.scenario import PlantKind, ReferencePiece
from services.plant_service import StaticMap, StaticMapPlant
from services.scenario_service import scenario_service


@pytest.fixture
def example1():
    return scenario_service.load_scenario("example1")


@pytest.fixture
def example2():
    return scenario_service.load_scenario("example2")


@pytest.fixture
def example3():
    return scenario_service.load_scenario("example3")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def siso_plant():
    """(u - 1)^2 with no reference switch."""
    static_map = StaticMap(PlantKind.SISO_QUADRATIC, [ReferencePiece(start=0, value=(1.0,))])
    return StaticMapPlant(static_map)
