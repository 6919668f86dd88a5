import numpy as np
import pytest

from gaitbch.connection import LocalConnection, constant_connection
from gaitbch.systems import DiffdriveParams, PurcellParams, diffdrive_connection, purcell_connection


@pytest.fixture(scope="session")
def purcell():
    return purcell_connection(PurcellParams())


@pytest.fixture(scope="session")
def diffdrive():
    return diffdrive_connection(DiffdriveParams(1.0, 1.0))


@pytest.fixture(scope="session")
def linear_field():
    """A1 = (r2, 0, 0), A2 = 0; dA = -1 in x, brackets vanish."""

    def field(pts):
        out = np.zeros((len(pts), 3, 2))
        out[:, 0, 0] = pts[:, 1]
        return out

    return LocalConnection(field, name="linear")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, n=3):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)
