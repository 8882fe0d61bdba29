import numpy as np
import pytest

from swlab.rw_core import make_gaussian_model
from swlab.verification import Suite, SuiteConfig


@pytest.fixture(scope="session")
def suite():
    """Acceptance suite at the documented sizes, shared across test modules."""
    return Suite(SuiteConfig())


@pytest.fixture(scope="session")
def model():
    return make_gaussian_model()


@pytest.fixture(scope="session")
def table(suite):
    """Cached kernel tables: table(a, M, n_max, h=None), shared with the suite."""
    return suite.table


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
