import numpy as np
import pytest

from cocosim.core import ModelParams


@pytest.fixture
def params():
    """Baseline parameterization used across the test suite."""
    return ModelParams()


@pytest.fixture
def rng():
    return np.random.default_rng(42)
