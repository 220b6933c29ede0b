import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from xchmc import builtin_target

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def gauss1d():
    return builtin_target("gaussian", 1)


@pytest.fixture
def gauss2d():
    return builtin_target("gaussian", 2, variances=[1.0, 4.0])


@pytest.fixture
def dwell1d():
    return builtin_target("double_well", 1)


@pytest.fixture
def dwell2d():
    return builtin_target("double_well", 2)


@pytest.fixture
def banana2d():
    return builtin_target("banana", 2, curvature=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
