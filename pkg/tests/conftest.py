import numpy as np
import pytest

from liouville_lab.grid2d import (make_periodic_grid, make_pinwheel_grid,
                                  make_radial_grid)
from liouville_lab.liouville2d import build_form

PINWHEEL_TWISTS = [0.35, -0.25, 0.1]


@pytest.fixture(scope="session")
def radial4_form():
    return build_form(make_radial_grid(4, 1.0))


@pytest.fixture(scope="session")
def radial3_form():
    return build_form(make_radial_grid(3, 1.0))


@pytest.fixture(scope="session")
def pinwheel_form():
    return build_form(make_pinwheel_grid(3, 1.0, PINWHEEL_TWISTS))


@pytest.fixture(scope="session")
def periodic_form():
    return build_form(make_periodic_grid(2))


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
