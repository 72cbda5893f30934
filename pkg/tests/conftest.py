import itertools

import numpy as np
import pytest

from bridge_stein.config_space import HypercubeConfig, LatticeConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical check")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _fresh(counter, k):
    out = [counter[0] + i for i in range(k)]
    counter[0] += k
    return out


def hypercube_classes(max_points=4):
    """One concrete pair per membership pattern (shared, only-a, only-b)."""
    for k in range(max_points + 1):
        for p in range(max_points + 1 - k):
            for q in range(max_points + 1 - k):
                if (k + p) % 2 or (k + q) % 2:
                    continue
                counter = [1]
                shared = _fresh(counter, k)
                only_a = _fresh(counter, p)
                only_b = _fresh(counter, q)
                scale = counter[0] + 1
                a = HypercubeConfig(tuple(x / scale for x in shared + only_a))
                b = HypercubeConfig(tuple(x / scale for x in shared + only_b))
                yield (k, p, q), a, b


def lattice_classes(max_points=4):
    """One concrete pair per membership pattern on each side."""
    rng = range(max_points + 1)
    for ku, kd, pu, pd, qu, qd in itertools.product(rng, repeat=6):
        na, nb = ku + pu, ku + qu
        if na != kd + pd or nb != kd + qd or na > max_points or nb > max_points:
            continue
        counter = [1]
        su, sd = _fresh(counter, ku), _fresh(counter, kd)
        au, ad = _fresh(counter, pu), _fresh(counter, pd)
        bu, bd = _fresh(counter, qu), _fresh(counter, qd)
        scale = counter[0] + 1
        f = lambda xs: tuple(x / scale for x in xs)
        yield ((ku, kd, pu, pd, qu, qd), LatticeConfig(f(su + au), f(sd + ad)),
               LatticeConfig(f(su + bu), f(sd + bd)))
