import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_triple(rng, m=None, n=None, r=None, positive=True):
    """A random (V, W, H) with strictly positive factors by default."""
    m = m or int(rng.integers(2, 7))
    n = n or int(rng.integers(2, 7))
    r = r or int(rng.integers(1, min(m, n) + 1))
    W = rng.uniform(0.1 if positive else 0.0, 2.0, size=(m, r))
    H = rng.uniform(0.1 if positive else 0.0, 2.0, size=(r, n))
    V = rng.uniform(0.0, 3.0, size=(m, n))
    return V, W, H
