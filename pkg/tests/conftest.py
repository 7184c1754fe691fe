import numpy as np
import pytest

from sixdmm.config import SystemConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    return SystemConfig(N=3, M=4, K=2)


@pytest.fixture
def tiny_config():
    return SystemConfig(N=2, M=2, K=2)
