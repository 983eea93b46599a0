import numpy as np
import pytest

from fpgeo.grid import rasterize
from fpgeo.shapes import Ball, Box


@pytest.fixture
def unit_box():
    return Box((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def disk_grid():
    """Disk of radius 0.3 centered in the unit square, h = 1/256."""
    return rasterize(Ball((0.5, 0.5), 0.3), 1 / 256, Box((0.0, 0.0), (1.0, 1.0)))


@pytest.fixture
def square_grid():
    return rasterize(Box((0.25, 0.25), (0.75, 0.75)), 1 / 256, Box((0.0, 0.0), (1.0, 1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
