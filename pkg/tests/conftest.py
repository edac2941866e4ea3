import numpy as np
import pytest

from relnav.doa import usbl_pyramid
from relnav.waveforms import default_template_bank


@pytest.fixture(scope="session")
def bank():
    return default_template_bank()


@pytest.fixture(scope="session")
def pyramid():
    return usbl_pyramid()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
