import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def sim03():
    """Reference simulation at rho = 0.3 (seed 0)."""
    from tsirsia.simulate import SimConfig, simulate

    return simulate(SimConfig(rho=0.3, seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
