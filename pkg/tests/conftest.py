import numpy as np
import pytest

from sbs_workbench.sphere import SphereConfig


@pytest.fixture(scope="session")
def cfg1():
    return SphereConfig.calibrated(1)


@pytest.fixture(scope="session")
def cfg2():
    return SphereConfig.calibrated(2)


@pytest.fixture(scope="session")
def cfg3():
    return SphereConfig.calibrated(3)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
