import numpy as np
import pytest

from opscan import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Runs a test once per available kernel backend."""
    previous = kernels.backend_name()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
