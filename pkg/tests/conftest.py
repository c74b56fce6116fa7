import math

import pytest

from hconf.geometry import flat_exterior, schwarzschild_base


@pytest.fixture(scope="session")
def flat3():
    return flat_exterior(3)


@pytest.fixture(scope="session")
def schw3():
    """Schwarzschild base of mass 2 cut at its horizon (area radius 4)."""
    return schwarzschild_base(3, 2.0)


@pytest.fixture
def pi():
    return math.pi
