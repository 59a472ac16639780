import numpy as np
import pytest

from orliczps.affine_ball import make_quadrature
from orliczps.field import Grid, ScalarField


def cone(grid, radius=1.0, center=(0.0, 0.0)):
    c = np.asarray(center)
    return ScalarField.from_function(
        grid, lambda x: 1.0 - np.linalg.norm(x - c, axis=-1) / radius)


@pytest.fixture(scope="session")
def cone_256():
    """1 - |x| on [-1.1, 1.1]^2 at 256^2."""
    return cone(Grid.square(1.1, 256))


@pytest.fixture(scope="session")
def cone_128():
    return cone(Grid.square(1.1, 128))


@pytest.fixture(scope="session")
def q512():
    return make_quadrature(2, 512)


@pytest.fixture(scope="session")
def q128():
    return make_quadrature(2, 128)
