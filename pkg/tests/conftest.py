import numpy as np
import pytest

from photonxfer.model import beam_splitter, direct_sum, prepend_scattering, random_system, single_mode


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def two_cavities(c1=1.0, c2=1.0, alpha=0.6, beta=0.8, omega1=0.0, omega2=0.0):
    base = direct_sum(single_mode([c1], omega1), single_mode([c2], omega2))
    return prepend_scattering(base, beam_splitter(alpha, beta))


def ring(g1=1.0, g2=2.0, alpha=0.6, beta=0.8):
    return prepend_scattering(single_mode([np.sqrt(g1), np.sqrt(g2)]), beam_splitter(alpha, beta))


@pytest.fixture
def identical_pair():
    return two_cavities()


@pytest.fixture
def random_systems():
    gen = np.random.default_rng(7)
    out = []
    for _ in range(30):
        n = int(gen.integers(1, 6))
        m = int(gen.integers(1, 4))
        out.append(random_system(gen, n, m))
    return out
