import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stochshe.dynamics import SimConfig
from stochshe.kernel import make_constant_kernel, make_zero_kernel
from stochshe.spectral import build_basis, zeros

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def basis8():
    return build_basis(np.pi, 8)


@pytest.fixture(scope="session")
def basis4():
    return build_basis(np.pi, 4)


def make_cfg(basis, a=2.0, eps=0.5, alpha=1.0, h=None, dt=2.0**-8, **kw):
    kernel = make_zero_kernel() if alpha == 0 else make_constant_kernel(alpha)
    return SimConfig(a=a, eps=eps, h=zeros(basis) if h is None else h, basis=basis,
                     kernel=kernel, dt=dt, **kw)
