import warnings

import numpy as np
import pytest

from excess_mass import densities


@pytest.fixture
def gaussian_sample():
    return densities.sample(densities.get_density("a"), 1000, 11)


@pytest.fixture(autouse=True)
def _quiet_schedule_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="level .* outside the recommended range")
        yield


def rng(seed=0):
    return np.random.default_rng(seed)
