import numpy as np
import pytest


def dyadic_uniform(rng, n, bits=10):
    """Uniform samples on the grid k/2^bits, k = 0..2^bits.

    On this grid 1 - v is exact and long sums stay exact in float64, so
    mirror-symmetry properties hold with no rounding slack.
    """
    scale = 2**bits
    return rng.integers(0, scale + 1, size=n).astype(np.float64) / scale


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
