import os
import subprocess
import sys

import numpy as np
import pytest

from bridge_stein import kernels
from bridge_stein.rng import as_generator, replica_generator

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("cython")
except ImportError:  # extension not built
    cy = None

needs_cython = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def _runs(k, seed):
    g = replica_generator(seed, 0)
    return [
        k.hypercube_run(g, [0.1, 0.4], 1.3, 7.0, True),
        k.lattice_run(g, [0.2], [0.8], 1.5, 0.7, 7.0, True),
        k.birth_death_run(g, 2, 2.5, 7.0, True),
    ]


@needs_cython
@pytest.mark.parametrize("seed", range(20))
def test_backends_bit_identical(seed):
    assert _runs(py, seed) == _runs(cy, seed)


@needs_cython
def test_distance_matrices_identical(rng):
    a = [tuple(np.sort(rng.random(2 * rng.integers(0, 4)))) for _ in range(30)]
    b = [tuple(np.sort(rng.random(2 * rng.integers(0, 4)))) for _ in range(30)]
    assert np.array_equal(py.hypercube_distance_matrix(a, b), cy.hypercube_distance_matrix(a, b))
    la = [(tuple(np.sort(rng.random(m))), tuple(np.sort(rng.random(m))))
          for m in rng.integers(0, 4, 30)]
    lb = [(tuple(np.sort(rng.random(m))), tuple(np.sort(rng.random(m))))
          for m in rng.integers(0, 4, 30)]
    assert np.array_equal(py.lattice_distance_matrix(la, lb), cy.lattice_distance_matrix(la, lb))


def test_backend_names():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend("python") is py
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_environment_forces_python():
    env = dict(os.environ, BRIDGE_STEIN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "from bridge_stein import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_streams():
    assert as_generator(5).random() == replica_generator(5, 0).random()
    assert replica_generator(5, 0).random() != replica_generator(5, 1).random()
    g = np.random.default_rng(1)
    assert as_generator(g) is g
