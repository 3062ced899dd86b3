import numpy as np
import pytest

from s2wssa import harmonic as hm


def random_image(L, seed):
    """Real image band-limited at ``L`` with standard normal coefficients."""
    return hm.sht_inverse(hm.random_coeffs(L, np.random.default_rng(seed)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
