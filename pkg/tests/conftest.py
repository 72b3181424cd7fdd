import numpy as np
import pytest

from platesynth.modal.shape import random_shape
from platesynth.neural.model import ModelHyper, init_weights


@pytest.fixture(scope="session")
def tiny_weights():
    """Small untrained network, enough to exercise every code path."""
    hyper = ModelHyper(d_lat=16, branches=8, cascade=1, hidden=32,
                       channels=(4, 8), sample_rate=44100.0)
    return init_weights(hyper, seed=0)


@pytest.fixture(scope="session")
def blob_grid():
    return random_shape(3)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
