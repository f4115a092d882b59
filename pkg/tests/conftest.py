import math

import numpy as np
import pytest

from subdiff.bernstein import DistributedOrder, Stable, TemperedStable


@pytest.fixture(scope="session")
def stable_half():
    return Stable(alpha=0.5)


@pytest.fixture(scope="session")
def tempered_half():
    return TemperedStable(alpha=0.5, temper=1.0)


@pytest.fixture(scope="session")
def sqrt_2u_spec():
    """Single-atom distributed-order model with f(u) = sqrt(2u) exactly."""
    return DistributedOrder(mixing=((0.5, math.sqrt(2.0 / math.pi)),))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240801)
