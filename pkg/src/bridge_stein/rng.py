"""Random number streams.

Every simulation draws from a :class:`numpy.random.PCG64` generator.  The
stream of replica ``r`` under master seed ``seed`` is seeded by
``SeedSequence([seed, r])``, so replicas are independent and any single
replica can be regenerated without running the others.
"""

import numpy as np

__all__ = ["replica_generator", "as_generator"]


def replica_generator(seed: int, replica: int) -> np.random.Generator:
    """Generator for replica ``replica`` of master seed ``seed``."""
    if seed < 0 or replica < 0:
        raise ValueError("seed and replica must be nonnegative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, replica])))


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed or an existing generator.

    Integers map to replica 0 of that seed, so ``as_generator(s)`` and
    ``replica_generator(s, 0)`` produce the same stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("a seed is required for reproducible runs")
    return replica_generator(int(seed), 0)
