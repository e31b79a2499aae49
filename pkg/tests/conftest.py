import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qtraj", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("qtraj")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
