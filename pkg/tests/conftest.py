import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("infodyn", deadline=None, max_examples=60)
settings.load_profile("infodyn")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
