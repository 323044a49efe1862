import numpy as np
import pytest

from morphkit.configdb import generate_dataset
from morphkit.surrogate import MaterialParams


@pytest.fixture(scope="session")
def mat():
    return MaterialParams()


@pytest.fixture(scope="session")
def db20k(mat):
    """Full-size dataset used by retrieval and acceptance tests."""
    return generate_dataset(20000, 42, mat)


@pytest.fixture(scope="session")
def db2k(mat):
    """Small dataset for solver unit tests."""
    return generate_dataset(2000, 7, mat)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(123)
