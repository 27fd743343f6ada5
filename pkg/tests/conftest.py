import numpy as np
import pytest

from nldlab.grid import DomainKind, RadialField, make_grid


@pytest.fixture(scope="session")
def ball_grid():
    return make_grid(DomainKind.BALL, 513)


@pytest.fixture(scope="session")
def free_grid():
    return make_grid(DomainKind.FREE, 513, 8.0)


@pytest.fixture(scope="session")
def gaussian_free(free_grid):
    return RadialField(grid=free_grid, values=np.exp(-free_grid.r**2))


def random_monotone_field(grid, rng, amplitude=1.0, support=None):
    """Nonnegative, radially non-increasing field from cumulated decrements."""
    drops = rng.uniform(0.0, 1.0, grid.n - 1)
    vals = np.concatenate([[0.0], np.cumsum(drops)])[::-1].copy()
    if support is not None:
        vals[grid.r > support] = 0.0
    peak = vals.max()
    if peak > 0:
        vals *= amplitude / peak
    return RadialField(grid=grid, values=vals)
