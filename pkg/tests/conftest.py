import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def torus():
    from infogeom.surfaces import torus as make

    return make(2.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
