import math

import numpy as np
import pytest
from hypothesis import settings

from mesothermo.grid import PhaseGrid, maxwellian

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")

N_STAR_UNIT = 0.5 * math.log(2.0 * math.pi) - 1.0


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    return PhaseGrid(16, 32, 1.0, 6.0)


def smooth_bump(grid, amplitude=0.05, mean=0.5, theta=1.0):
    """Maxwellian in v modulated by a smooth positive profile in r."""
    k = 2.0 * np.pi / grid.length_r
    q = np.exp(np.sin(k * grid.r) + 0.5 * np.cos(2.0 * k * grid.r + 0.3))
    q /= q.mean()
    return maxwellian(grid, 1.0, mean, theta) * (1.0 + amplitude * (q - 1.0))[:, None]
