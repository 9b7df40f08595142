import numpy as np
import pytest

from scriptid.gabor import make_filter_bank


@pytest.fixture(scope="session")
def default_bank():
    return make_filter_bank()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
