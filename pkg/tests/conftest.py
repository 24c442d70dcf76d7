import numpy as np
import pytest

from fbmlab import FbmCovariance, HurstParams, sample_fbm


@pytest.fixture(scope="session")
def params():
    return HurstParams(0.4)


@pytest.fixture(scope="session")
def kernel(params):
    return FbmCovariance(params)


@pytest.fixture(scope="session")
def batch(params):
    """Shared medium-size batch: level 8, 200 paths."""
    return sample_fbm(params, 8, 200, 7)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250810)
