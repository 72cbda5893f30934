"""Level-dependent jump rates and the path density they induce.

A walk on the integers that jumps up at rate ``a(j)`` and down at rate
``b(j)`` from level ``j`` has, relative to the unit-rate walk, the density

.. math::

    M(X) = \\exp\\Big(-\\int_0^1 \\Xi(X_{t-})\\,dt\\Big)
           \\prod_{t \\in U^+} a(X_{t-}) \\prod_{s \\in U^-} b(X_{s-}),

with ``Xi = a + b``.  Bridges of such walks are the unit-rate bridge law
reweighted by ``M``.  This module evaluates ``log M``, the ratio
``H(U, u, v) = M(Psi_{u,v} U) / M(U)`` and the exact extrema of ``H``
over all admissible additions ``(u, v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config_space import LatticeConfig, apply_move

__all__ = [
    "RateFamily",
    "log_density_M",
    "density_ratio_H",
    "addition_log_ratio_range",
    "addition_log_ratio_grid",
]


@dataclass(frozen=True)
class RateFamily:
    """Up/down jump rates as functions of the current level.

    Parameters
    ----------
    a, b : callable
        Map an integer level to a strictly positive rate.
    name : str
        Short tag used in reports.
    params : dict
        Parameters echoed into reports.
    """

    a: Callable[[int], float]
    b: Callable[[int], float]
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def xi(self, j: int) -> float:
        return self.a(j) + self.b(j)

    @classmethod
    def unit(cls) -> "RateFamily":
        """The simple walk with unit rates; its density is constant."""
        return cls(lambda j: 1.0, lambda j: 1.0, "unit", {})

    @classmethod
    def reversible_step(cls, kappa: float) -> "RateFamily":
        """Reversible walk whose total rate jumps by ``kappa`` at level 0.

        Uses ``a(j) = exp(h(j))`` and ``b(j) = exp(-h(j-1))`` with
        ``h = c`` on nonnegative levels and ``-c`` on negative ones, where
        ``2 sinh(c) = kappa``.  Then ``a(j) b(j+1) = 1`` and
        ``|Xi(j+1) - Xi(j)|`` equals ``kappa`` at the two steps adjacent
        to level 0 and vanishes elsewhere.
        """
        if kappa < 0:
            raise ValueError("kappa must be nonnegative")
        c = math.asinh(kappa / 2.0)

        def h(j):
            return c if j >= 0 else -c

        return cls(lambda j: math.exp(h(j)), lambda j: math.exp(-h(j - 1)),
                   "reversible_step", {"kappa": kappa})

    @classmethod
    def constant_speed_alternating(cls, ratio: float, speed: float = 2.0) -> "RateFamily":
        """Constant-speed walk with ``mu / nu = ratio``.

        ``a(j) = s/2 (1 + delta (-1)^j)`` and ``b(j) = s/2 (1 - delta (-1)^j)``
        give ``Xi = s`` everywhere and ``a(j) b(j+1) = (s/2)^2 (1 +/- delta)^2``,
        so ``delta = (sqrt(ratio) - 1) / (sqrt(ratio) + 1)``.
        """
        if ratio < 1:
            raise ValueError("ratio = mu/nu must be >= 1")
        delta = (math.sqrt(ratio) - 1.0) / (math.sqrt(ratio) + 1.0)
        half = speed / 2.0

        def sign(j):
            return 1.0 if j % 2 == 0 else -1.0

        mu = (half * (1 + delta)) ** 2
        nu = (half * (1 - delta)) ** 2
        return cls(lambda j: half * (1 + delta * sign(j)),
                   lambda j: half * (1 - delta * sign(j)),
                   "constant_speed", {"ratio": ratio, "speed": speed,
                                      "delta": delta, "mu": mu, "nu": nu})


def _path(config: LatticeConfig):
    """Jump times (with 0 and 1 appended), signs and levels per cell."""
    events = sorted([(t, 1) for t in config.up] + [(t, -1) for t in config.down])
    times = [0.0] + [t for t, _ in events] + [1.0]
    signs = [s for _, s in events]
    levels = [0]
    for s in signs:
        levels.append(levels[-1] + s)
    return times, signs, levels


def _rate(f, level, what):
    value = float(f(level))
    if not value > 0.0 or not math.isfinite(value):
        raise ValueError(f"rate {what}({level}) = {value!r} is not strictly positive")
    return value


def log_density_M(config: LatticeConfig, rates: RateFamily) -> float:
    """Logarithm of the path density of ``config`` under ``rates``.

    Computed exactly from the piecewise-constant path: the integral of the
    total rate is a finite sum over level durations.

    Raises
    ------
    ValueError
        If a rate evaluated along the path is not strictly positive.
    """
    times, signs, levels = _path(config)
    total = 0.0
    for k, level in enumerate(levels):
        xi = _rate(rates.a, level, "a") + _rate(rates.b, level, "b")
        total -= xi * (times[k + 1] - times[k])
    for k, s in enumerate(signs):
        before = levels[k]
        if s > 0:
            total += math.log(_rate(rates.a, before, "a"))
        else:
            total += math.log(_rate(rates.b, before, "b"))
    return total


def density_ratio_H(config: LatticeConfig, r: float, s: float,
                    rates: RateFamily) -> float:
    """Ratio ``M(Psi_{r,s} U) / M(U)`` for an addition or removal.

    Raises
    ------
    ValueError
        If ``(r, s)`` leaves ``config`` unchanged.
    """
    moved = apply_move(config, r, s)
    if moved is config:
        raise ValueError("(r, s) is neither a valid addition nor a removal")
    return math.exp(log_density_M(moved, rates) - log_density_M(config, rates))


class _Tables:
    """Per-configuration tables for the closed form of ``log H``.

    For an addition with ``u`` in cell ``i`` and ``v`` in cell ``j`` the
    log ratio is ``-(F(v) - F(u)) + A_i + B_j + G_j - G_i`` where ``F`` is
    the running integral of the total-rate increment, ``A``/``B`` are the
    rates of the two new jumps and ``G`` accumulates the change of rate
    factors of the existing jumps lying between ``u`` and ``v``.  Two such
    tables exist: ``u < v`` shifts the path up on ``[u, v)``, ``u > v``
    shifts it down on ``[v, u)``.
    """

    def __init__(self, config, rates, direction):
        times, signs, levels = _path(config)
        self.edges = np.asarray(times)
        cache = {}

        def a(j):
            if ("a", j) not in cache:
                cache[("a", j)] = _rate(rates.a, j, "a")
            return cache[("a", j)]

        def b(j):
            if ("b", j) not in cache:
                cache[("b", j)] = _rate(rates.b, j, "b")
            return cache[("b", j)]

        n_cells = len(levels)
        slope = np.array([a(L + direction) + b(L + direction) - a(L) - b(L)
                          for L in levels])
        lengths = np.diff(self.edges)
        self.F0 = np.concatenate(([0.0], np.cumsum(slope * lengths)))[:n_cells]
        self.slope = slope
        if direction > 0:
            # new up jump at the left point, new down jump at the right point
            self.left = np.array([math.log(a(L)) for L in levels])
            self.right = np.array([math.log(b(L + 1)) for L in levels])
        else:
            # new down jump at the left point, new up jump at the right point
            self.left = np.array([math.log(b(L)) for L in levels])
            self.right = np.array([math.log(a(L - 1)) for L in levels])
        shifts = []
        for k, sgn in enumerate(signs):
            L = levels[k]
            f = a if sgn > 0 else b
            shifts.append(math.log(f(L + direction)) - math.log(f(L)))
        self.G = np.concatenate(([0.0], np.cumsum(shifts)))

    def F(self, cell, x):
        return self.F0[cell] + self.slope[cell] * (x - self.edges[cell])

    def value(self, i, x_left, j, x_right):
        return (-(self.F(j, x_right) - self.F(i, x_left))
                + self.left[i] + self.right[j] + self.G[j] - self.G[i])


def _corner_values(tab):
    n = len(tab.slope)
    i, j = np.triu_indices(n)
    e = tab.edges
    vals = [tab.value(i, e[i], j, e[j + 1]),
            tab.value(i, e[i + 1], j, e[j + 1]),
            tab.value(i, e[i], j, e[j])]
    off = i < j
    vals.append(tab.value(i[off], e[i[off] + 1], j[off], e[j[off]]))
    return np.concatenate(vals)


def addition_log_ratio_range(config: LatticeConfig, rates: RateFamily):
    """Exact infimum and supremum of ``log H(U, u, v)`` over additions.

    Inside each pair of cells of the partition of ``(0, 1)`` by the jump
    times, ``log H`` is affine in ``(u, v)``; on a single cell the
    constraint ``u < v`` (or ``u > v``) cuts out a triangle.  The extrema
    are therefore attained at the corners of these rectangles and
    triangles, in the limit from the inside.

    Returns
    -------
    (float, float)
        ``(inf log H, sup log H)``.
    """
    lo = math.inf
    hi = -math.inf
    for direction in (1, -1):
        vals = _corner_values(_Tables(config, rates, direction))
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    return lo, hi


def addition_log_ratio_grid(config: LatticeConfig, rates: RateFamily,
                            size: int = 32):
    """``log H`` on the midpoints of a ``size x size`` grid of (u, v).

    Diagonal points and points colliding with existing jumps are skipped.
    Used as an independent safety net for the corner search.
    """
    grid = (np.arange(size) + 0.5) / size
    out = []
    for direction in (1, -1):
        tab = _Tables(config, rates, direction)
        u, v = np.meshgrid(grid, grid, indexing="ij")
        mask = (u < v) if direction > 0 else (u > v)
        left = np.minimum(u, v)[mask]
        right = np.maximum(u, v)[mask]
        i = np.searchsorted(tab.edges, left, side="right") - 1
        j = np.searchsorted(tab.edges, right, side="right") - 1
        ok = (tab.edges[i] != left) & (tab.edges[j] != right)
        out.append(tab.value(i[ok], left[ok], j[ok], right[ok]))
    return np.concatenate(out)
