import numpy as np
import pytest

from muotfs import PilotConfig, SystemDims
from muotfs.synthesis import random_scenario

REF_DIMS = SystemDims(32, 64, 4, 6)
REF_PILOT = PilotConfig(8, 4, 4, 1)


@pytest.fixture
def ref_dims():
    return REF_DIMS


@pytest.fixture
def ref_pilot():
    return REF_PILOT


def ref_scenario(seed):
    return random_scenario(REF_DIMS, REF_PILOT, np.random.default_rng(seed), seed=seed)
