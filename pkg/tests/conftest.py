import numpy as np
import pytest

from gnlse.grid import Lattice, PhysicalConstants

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def constants():
    return PhysicalConstants()


@pytest.fixture
def lat1d():
    return Lattice(extents=(TWO_PI,), points=(64,))


@pytest.fixture
def lat2d():
    return Lattice(extents=(TWO_PI, TWO_PI), points=(24, 24))
