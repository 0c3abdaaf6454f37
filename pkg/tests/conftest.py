import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, dim=4, rank=None):
    rank = rank or dim
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = G @ G.conj().T
    return m / np.trace(m).real
