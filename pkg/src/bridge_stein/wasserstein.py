"""Empirical 1-Wasserstein distance between configuration samples.

For two samples of equal size ``n`` with uniform weights, the optimal
transport plan is a permutation, so the empirical distance is the
minimum-cost perfect matching under the graph metric divided by ``n``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .config_space import HypercubeConfig, LatticeConfig
from .rng import as_generator

__all__ = ["SampleSet", "assignment_solve", "assignment_brute_force",
           "distance_matrix", "empirical_w1", "W1Result", "MAX_SAMPLE"]

MAX_SAMPLE = 512


@dataclass(frozen=True)
class SampleSet:
    """Equally weighted configurations of a single variant."""

    configs: tuple

    def __init__(self, configs: Sequence):
        configs = tuple(configs)
        if not configs:
            raise ValueError("SampleSet must be nonempty")
        kind = type(configs[0])
        if kind not in (HypercubeConfig, LatticeConfig):
            raise TypeError(f"unsupported configuration type {kind.__name__}")
        if any(type(c) is not kind for c in configs):
            raise TypeError("SampleSet mixes configuration variants")
        object.__setattr__(self, "configs", configs)

    def __len__(self):
        return len(self.configs)

    @property
    def variant(self):
        return type(self.configs[0])


def assignment_solve(cost):
    """Exact minimum-cost perfect matching.

    Parameters
    ----------
    cost : array_like, shape (n, n)
        Nonnegative costs, ``n <= 512``.

    Returns
    -------
    (numpy.ndarray, float)
        ``perm`` with row ``i`` matched to column ``perm[i]``, and the
        total cost.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if cost.shape[0] > MAX_SAMPLE:
        raise ValueError(f"cost matrix larger than {MAX_SAMPLE}")
    if (cost < 0).any():
        raise ValueError("costs must be nonnegative")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.intp)
    perm[rows] = cols
    return perm, float(cost[rows, cols].sum())


def assignment_brute_force(cost):
    """Minimum over all permutations; an oracle for small matrices."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if n > 8:
        raise ValueError("brute force is limited to n <= 8")
    best = None
    best_perm = None
    idx = np.arange(n)
    for perm in itertools.permutations(range(n)):
        total = float(cost[idx, list(perm)].sum())
        if best is None or total < best:
            best, best_perm = total, perm
    return np.array(best_perm), best


def distance_matrix(a: SampleSet, b: SampleSet) -> np.ndarray:
    """Graph distances ``d(a_i, b_j)``."""
    if a.variant is not b.variant:
        raise TypeError("samples are of different variants")
    if a.variant is HypercubeConfig:
        return kernels.hypercube_distance_matrix([c.times for c in a.configs],
                                                 [c.times for c in b.configs])
    return kernels.lattice_distance_matrix([(c.up, c.down) for c in a.configs],
                                           [(c.up, c.down) for c in b.configs])


@dataclass(frozen=True)
class W1Result:
    """Estimate with bootstrap standard error."""

    w1: float
    se: float
    n: int
    repetitions: int = 1

    def to_dict(self) -> dict:
        return {"w1": self.w1, "se": self.se, "n": self.n,
                "repetitions": self.repetitions}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _canonical(s: SampleSet):
    # order-independent representation so that (A, B) and (B, A) and any
    # permutation of the inputs give bit-identical results
    if s.variant is HypercubeConfig:
        key = lambda c: (len(c.times), c.times)
    else:
        key = lambda c: (len(c.up), c.up, c.down)
    return SampleSet(sorted(s.configs, key=key))


def _key(s: SampleSet):
    c = s.configs
    if s.variant is HypercubeConfig:
        return [x.times for x in c]
    return [(x.up, x.down) for x in c]


def empirical_w1(a: SampleSet, b: SampleSet, bootstrap: int = 50, seed=0) -> W1Result:
    """Empirical W1 between two equal-size samples.

    The estimate is the optimal matching cost divided by ``n``.  The
    standard error is the standard deviation of the estimate over
    ``bootstrap`` paired resamples of both samples.

    Parameters
    ----------
    a, b : SampleSet
        Same variant and size, size at most 512.
    bootstrap : int
        Number of bootstrap repetitions (0 disables).
    seed : int or numpy.random.Generator
        Seed for the bootstrap resampling.

    Returns
    -------
    W1Result
    """
    if not isinstance(a, SampleSet):
        a = SampleSet(a)
    if not isinstance(b, SampleSet):
        b = SampleSet(b)
    if len(a) != len(b):
        raise ValueError("samples must have equal size")
    if len(a) > MAX_SAMPLE:
        raise ValueError(f"samples larger than {MAX_SAMPLE}")
    if a.variant is not b.variant:
        raise TypeError("samples are of different variants")
    a, b = _canonical(a), _canonical(b)
    if _key(b) < _key(a):
        a, b = b, a
    cost = distance_matrix(a, b)
    n = len(a)
    _, total = assignment_solve(cost)
    estimate = total / n
    se = 0.0
    if bootstrap > 0:
        gen = as_generator(seed)
        reps = np.empty(bootstrap)
        for k in range(bootstrap):
            ia = gen.integers(0, n, n)
            ib = gen.integers(0, n, n)
            reps[k] = assignment_solve(cost[np.ix_(ia, ib)])[1] / n
        se = float(reps.std(ddof=1)) if bootstrap > 1 else 0.0
    return W1Result(float(estimate), se, n, 1)
