"""Coalescing coupling of two bridge chains started at neighbours.

Two chains start at ``V`` and ``U = Psi_{r,s} V``.  They share the birth
clock and the death clocks of every pair they have in common.

Phase 0
    The larger configuration equals the smaller one plus the pair
    ``{r, s}``.  If the clock of ``{r, s}`` rings the chains coincide.  If
    a clock pairing one of ``r, s`` with a point ``w`` of the smaller
    configuration rings, only the larger chain moves.  The other point
    ``zeta`` of ``{r, s}`` and ``eta = w`` then form the single
    discrepancy, at distance 2.  That time is ``T_m``.
Phase 1
    ``U = C + {zeta}`` and ``V = C + {eta}``.  The clock of ``{zeta, x}``
    in ``U`` is switched to drive ``{eta, x}`` in ``V``, so when it rings
    both chains drop to ``C - {x}`` and coalesce.  That time is ``T_M``.

Clocks are realised lazily: at each step only the exponential clocks of
live pairs compete, which by the memoryless property gives the same law
as the fixed family of clocks.  Each marginal is therefore a copy of the
single chain.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .chain_dynamics import Hypercube, Lattice
from .config_space import HypercubeConfig, LatticeConfig, apply_move, graph_distance
from .exact_oracles import sample_bridge_exact
from .rng import as_generator, replica_generator

__all__ = ["CoupledTrajectory", "ContractionCurve", "simulate_coupled",
           "estimate_contraction", "contraction_bound"]


def contraction_bound(t):
    """``4 exp(-t/2) + exp(-t)``."""
    t = np.asarray(t, dtype=float)
    return 4.0 * np.exp(-t / 2.0) + np.exp(-t)


@dataclass
class CoupledTrajectory:
    """Joint run of two coupled chains.

    Attributes
    ----------
    events : list of tuple
        ``(t, touches, distance_after)`` with ``touches`` one of
        ``"both"``, ``"U"``, ``"V"``.
    T_m : float
        First ring of a clock involving ``r`` or ``s``; ``inf`` if none
        rang before ``t_end``.
    T_M : float
        Coalescence time; ``inf`` if the chains have not met by ``t_end``.
    coalesced : bool
    U_final, V_final : configuration
    t_end : float
    """

    events: list
    T_m: float
    T_M: float
    coalesced: bool
    U_final: object
    V_final: object
    t_end: float
    initial: tuple = field(default=())

    def distance_at(self, t: float) -> int:
        """``1{t < T_m} + 2 * 1{T_m <= t < T_M}``."""
        return int(t < self.T_m) + 2 * int(self.T_m <= t < self.T_M)

    def marginal_event_count(self, which: str, t: float | None = None) -> int:
        """Number of moves of chain ``which`` ('U' or 'V') up to time ``t``."""
        t = self.t_end if t is None else t
        return sum(1 for s, touches, _ in self.events
                   if s <= t and touches in ("both", which))


def _unrank_pair(k, n):
    i = 0
    row = n - 1
    while k >= row:
        k -= row
        i += 1
        row -= 1
    return i, i + 1 + k


def _run_hypercube(V, r, s, alpha, t_end, gen, follow=True):
    r, s = min(r, s), max(r, s)
    big_is_U = not (r in V)
    small = list(V.times) if big_is_U else [t for t in V.times if t != r and t != s]
    birth = 0.5 * alpha * alpha
    t = 0.0
    events = []
    T_m = T_M = math.inf
    phase = 0
    zeta = eta = None
    common = None
    while True:
        if phase == 0:
            big = sorted(small + [r, s])
            n = len(big)
        else:
            n = len(common) + 1
        n_pairs = n * (n - 1) // 2
        rate = birth + n_pairs
        t += -math.log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < birth:
            x = gen.random()
            y = gen.random()
            x, y = min(x, y), max(x, y)
            taken = small + [r, s] if phase == 0 else common + [zeta, eta]
            if x == y or x <= 0.0 or x in taken or y in taken:
                continue
            if phase == 0:
                small += [x, y]
            else:
                common += [x, y]
            events.append((t, "both", 1 if phase == 0 else 2))
            continue
        k = int(math.floor(gen.random() * n_pairs))
        if phase == 0:
            i, j = _unrank_pair(k, n)
            a, b = big[i], big[j]
            special = {a, b} & {r, s}
            if not special:
                small.remove(a)
                small.remove(b)
                events.append((t, "both", 1))
            elif len(special) == 2:
                T_m = T_M = t
                events.append((t, "U" if big_is_U else "V", 0))
                final = sorted(small)
                break
            else:
                x = special.pop()
                w = b if a == x else a
                zeta = s if x == r else r
                eta = w
                common = [p for p in small if p != w]
                phase = 1
                T_m = t
                events.append((t, "U" if big_is_U else "V", 2))
        else:
            # pairs of U = common + {zeta}; the last index is zeta
            members = sorted(common) + [zeta]
            i, j = _unrank_pair(k, n)
            a, b = members[i], members[j]
            if b == zeta:
                common.remove(a)
                T_M = t
                events.append((t, "both", 0))
                final = sorted(common)
                break
            common.remove(a)
            common.remove(b)
            events.append((t, "both", 2))
    if T_M < math.inf and not follow:
        return events, T_m, T_M, None, None
    if T_M < math.inf:
        times, _, log = kernels.hypercube_run(gen, final, alpha, t_end - T_M, True)
        events.extend((T_M + e[0], "both", 0) for e in log)
        U_final = V_final = HypercubeConfig(tuple(times))
    else:
        if phase == 0:
            big_c = HypercubeConfig(tuple(sorted(small + [r, s])))
            small_c = HypercubeConfig(tuple(sorted(small)))
        else:
            big_c = HypercubeConfig(tuple(sorted(common + [zeta])))
            small_c = HypercubeConfig(tuple(sorted(common + [eta])))
        U_final, V_final = (big_c, small_c) if big_is_U else (small_c, big_c)
    return events, T_m, T_M, U_final, V_final


def _run_lattice(V, r, s, jp, jm, t_end, gen, follow=True):
    big_is_U = r not in V.up
    if big_is_U:
        sup, sdown = list(V.up), list(V.down)
    else:
        sup = [t for t in V.up if t != r]
        sdown = [t for t in V.down if t != s]
    birth = jp * jm
    t = 0.0
    events = []
    T_m = T_M = math.inf
    phase = 0
    side = zeta = eta = None
    while True:
        if phase == 0:
            bup = sorted(sup + [r])
            bdown = sorted(sdown + [s])
            m = len(bup)
        else:
            m = len(sup) + (1 if side > 0 else 0)
        deaths = m * m
        rate = birth + deaths
        t += -math.log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < birth:
            x = gen.random()
            y = gen.random()
            taken = set(sup) | set(sdown) | {r, s}
            if phase == 1:
                taken |= {zeta, eta}
            if x == y or x <= 0.0 or y <= 0.0 or x in taken or y in taken:
                continue
            sup.append(x)
            sdown.append(y)
            events.append((t, "both", 1 if phase == 0 else 2))
            continue
        k = int(math.floor(gen.random() * deaths))
        i = k // m
        j = k - i * m
        if phase == 0:
            a, b = bup[i], bdown[j]
            if a == r and b == s:
                T_m = T_M = t
                events.append((t, "U" if big_is_U else "V", 0))
                final = (sorted(sup), sorted(sdown))
                break
            if a == r:
                # big drops r and b; s is left on the down side
                side, zeta, eta = -1, s, b
                sdown.remove(b)
                phase = 1
                T_m = t
                events.append((t, "U" if big_is_U else "V", 2))
            elif b == s:
                side, zeta, eta = 1, r, a
                sup.remove(a)
                phase = 1
                T_m = t
                events.append((t, "U" if big_is_U else "V", 2))
            else:
                sup.remove(a)
                sdown.remove(b)
                events.append((t, "both", 1))
        else:
            # U = (sup, sdown) plus zeta on `side`; the last index on
            # that side is zeta
            if side > 0:
                ups = sorted(sup) + [zeta]
                downs = sorted(sdown)
            else:
                ups = sorted(sup)
                downs = sorted(sdown) + [zeta]
            a, b = ups[i], downs[j]
            if a == zeta or b == zeta:
                if side > 0:
                    sdown.remove(b)
                else:
                    sup.remove(a)
                T_M = t
                events.append((t, "both", 0))
                final = (sorted(sup), sorted(sdown))
                break
            sup.remove(a)
            sdown.remove(b)
            events.append((t, "both", 2))
    if T_M < math.inf and not follow:
        return events, T_m, T_M, None, None
    if T_M < math.inf:
        (up, down), _, log = kernels.lattice_run(gen, final[0], final[1], jp, jm,
                                                 t_end - T_M, True)
        events.extend((T_M + e[0], "both", 0) for e in log)
        U_final = V_final = LatticeConfig(tuple(up), tuple(down))
    else:
        if phase == 0:
            big_c = LatticeConfig(tuple(sorted(sup + [r])), tuple(sorted(sdown + [s])))
        elif side > 0:
            big_c = LatticeConfig(tuple(sorted(sup + [zeta])), tuple(sorted(sdown)))
        else:
            big_c = LatticeConfig(tuple(sorted(sup)), tuple(sorted(sdown + [zeta])))
        if phase == 0:
            small_c = LatticeConfig(tuple(sorted(sup)), tuple(sorted(sdown)))
        elif side > 0:
            small_c = LatticeConfig(tuple(sorted(sup + [eta])), tuple(sorted(sdown)))
        else:
            small_c = LatticeConfig(tuple(sorted(sup)), tuple(sorted(sdown + [eta])))
        U_final, V_final = (big_c, small_c) if big_is_U else (small_c, big_c)
    return events, T_m, T_M, U_final, V_final


def simulate_coupled(V, r: float, s: float, variant, t_end: float, seed) -> CoupledTrajectory:
    """Run the coupled pair started at ``(Psi_{r,s} V, V)`` up to ``t_end``.

    Parameters
    ----------
    V : HypercubeConfig or LatticeConfig
    r, s : float
        The move defining ``U = Psi_{r,s} V``; for lattice configurations
        ``r`` is an up time and ``s`` a down time.
    variant : Hypercube or Lattice
    t_end : float
    seed : int or numpy.random.Generator

    Raises
    ------
    ValueError
        If ``Psi_{r,s} V == V``.
    """
    if not t_end >= 0:
        raise ValueError("t_end must be nonnegative")
    U = apply_move(V, r, s)
    if U is V:
        raise ValueError("(r, s) does not move V; the chains would not be neighbours")
    gen = as_generator(seed)
    if isinstance(variant, Hypercube) and isinstance(V, HypercubeConfig):
        out = _run_hypercube(V, r, s, float(variant.alpha), float(t_end), gen)
    elif isinstance(variant, Lattice) and isinstance(V, LatticeConfig):
        out = _run_lattice(V, r, s, float(variant.j_plus), float(variant.j_minus),
                           float(t_end), gen)
    else:
        raise TypeError("coupling is available for hypercube and lattice chains")
    events, T_m, T_M, U_final, V_final = out
    return CoupledTrajectory(events, T_m, T_M, T_M < math.inf, U_final, V_final,
                             float(t_end), (U, V))


@dataclass
class ContractionCurve:
    """Monte Carlo estimate of ``E d(U_t, V_t)`` on a time grid."""

    t: np.ndarray
    mean_d: np.ndarray
    se: np.ndarray
    survival_Tm: np.ndarray
    survival_Tm_se: np.ndarray
    replicas: int

    @property
    def bound(self) -> np.ndarray:
        return contraction_bound(self.t)

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        if header is not None:
            buf.write("# provenance: " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "mean_d", "se", "bound_4exp_half_plus_exp", "survival_Tm",
                    "survival_Tm_se"])
        for row in zip(self.t, self.mean_d, self.se, self.bound, self.survival_Tm,
                       self.survival_Tm_se):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _neighbour_start(variant, gen):
    if isinstance(variant, Hypercube):
        V = sample_bridge_exact(variant, gen)
        while True:
            r, s = gen.random(), gen.random()
            if r != s and r > 0 and s > 0 and r not in V and s not in V:
                return V, r, s
    V = sample_bridge_exact(variant, gen)
    taken = set(V.up) | set(V.down)
    while True:
        r, s = gen.random(), gen.random()
        if r != s and r > 0 and s > 0 and r not in taken and s not in taken:
            return V, r, s


def estimate_contraction(variant, t_grid, replicas: int, seed: int,
                         start=None) -> ContractionCurve:
    """Estimate ``E d(U_t, V_t)`` for coupled neighbours.

    Parameters
    ----------
    variant : Hypercube or Lattice
    t_grid : sequence of float
    replicas : int
        At least 100.
    seed : int
    start : tuple, optional
        ``(V, r, s)``.  By default each replica draws ``V`` from the
        bridge law and ``(r, s)`` uniformly, so that ``U`` and ``V`` are
        neighbours.

    Returns
    -------
    ContractionCurve
    """
    t_grid = np.asarray(list(t_grid), dtype=float)
    if t_grid.size == 0:
        raise ValueError("t_grid is empty")
    if replicas < 100:
        raise ValueError("replicas must be >= 100")
    horizon = float(t_grid.max())
    d = np.zeros((replicas, t_grid.size))
    tm_alive = np.zeros((replicas, t_grid.size))
    for k in range(replicas):
        gen = replica_generator(seed, k)
        V, r, s = start if start is not None else _neighbour_start(variant, gen)
        if k == 0 and graph_distance(apply_move(V, r, s), V) != 1:
            raise AssertionError("starting configurations are not neighbours")
        if isinstance(variant, Hypercube):
            out = _run_hypercube(V, r, s, float(variant.alpha), horizon, gen, follow=False)
        else:
            out = _run_lattice(V, r, s, float(variant.j_plus), float(variant.j_minus),
                               horizon, gen, follow=False)
        T_m, T_M = out[1], out[2]
        d[k] = (t_grid < T_m) + 2 * ((T_m <= t_grid) & (t_grid < T_M))
        tm_alive[k] = t_grid < T_m
    sq = math.sqrt(replicas)
    return ContractionCurve(t_grid, d.mean(axis=0), d.std(axis=0, ddof=1) / sq,
                            tm_alive.mean(axis=0), tm_alive.std(axis=0, ddof=1) / sq,
                            replicas)

