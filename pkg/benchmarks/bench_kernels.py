"""Compare the compiled and pure-Python simulation kernels.

Run with ``python3 benchmarks/bench_kernels.py [--replicas N]``.  For each
kernel the script times the same replicas on both backends, checks that
the outputs agree exactly, and prints the speed-up.
"""

import argparse
import time

import numpy as np

from bridge_stein.kernels import get_backend
from bridge_stein.rng import replica_generator


def _cases():
    yield "hypercube_run (alpha=1, t=50)", lambda k, g: k.hypercube_run(g, (), 1.0, 50.0, False)
    yield "lattice_run (j=1, t=50)", lambda k, g: k.lattice_run(g, (), (), 1.0, 1.0, 50.0, False)
    yield "birth_death_run (lam=1, t=50)", lambda k, g: k.birth_death_run(g, 0, 1.0, 50.0, False)


def _distance_case(kernel, n):
    gen = np.random.default_rng(0)
    a = [tuple(np.sort(gen.random(2 * gen.integers(0, 4)))) for _ in range(n)]
    b = [tuple(np.sort(gen.random(2 * gen.integers(0, 4)))) for _ in range(n)]
    return kernel.hypercube_distance_matrix(a, b)


def _time(fn, replicas):
    start = time.perf_counter()
    out = [fn(replica_generator(0, k)) for k in range(replicas)]
    return time.perf_counter() - start, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--replicas", type=int, default=2000)
    parser.add_argument("--matrix-size", type=int, default=256)
    args = parser.parse_args(argv)
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    py = get_backend("python")
    print(f"{'kernel':34s} {'cython [s]':>11s} {'python [s]':>11s} {'speed-up':>9s}  identical")
    for name, run in _cases():
        t_cy, out_cy = _time(lambda g: run(cy, g), args.replicas)
        t_py, out_py = _time(lambda g: run(py, g), args.replicas)
        same = out_cy == out_py
        print(f"{name:34s} {t_cy:11.3f} {t_py:11.3f} {t_py / t_cy:9.1f}  {same}")
    n = args.matrix_size
    start = time.perf_counter()
    m_cy = _distance_case(cy, n)
    t_cy = time.perf_counter() - start
    start = time.perf_counter()
    m_py = _distance_case(py, n)
    t_py = time.perf_counter() - start
    same = bool(np.array_equal(m_cy, m_py))
    print(f"{f'hypercube_distance_matrix ({n}x{n})':34s} {t_cy:11.3f} {t_py:11.3f} "
          f"{t_py / t_cy:9.1f}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
