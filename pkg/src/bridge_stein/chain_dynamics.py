"""Continuous-time Markov chains whose invariant laws are bridge laws.

Every chain is simulated in jump-chain (Gillespie) form: wait an
exponential time with the total rate of the current state, then pick the
event in proportion to its rate.  Randomness is drawn in a fixed order
(holding time, event type, then the event's own uniforms) so that runs are
reproducible from ``(params, seed)`` and the compiled and pure-Python
kernels agree exactly.

Chains
------
hypercube
    Births of a uniform pair at rate ``alpha**2 / 2``, each existing pair
    dies at rate 1.  Invariant law: the hypercube bridge.
lattice
    Births of ``(r, s)``, ``r`` an up time and ``s`` a down time, at rate
    ``j_plus * j_minus``; each element of ``U+ x U-`` dies at rate 1.
nonhomogeneous
    Lattice deaths; births with intensity ``H(U, r, s)`` produced by
    thinning a uniform proposal stream.
scheme
    Lattice dynamics restricted to configurations with at most one jump
    per block ``((j-1)/N, j/N]``.
poisson_diag
    Birth-death chain on the integers with birth rate ``lam`` and death
    rate ``n**2``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .config_space import HypercubeConfig, LatticeConfig, apply_move
from .rates import RateFamily, addition_log_ratio_range, density_ratio_H
from .rng import as_generator, replica_generator

__all__ = [
    "Hypercube",
    "Lattice",
    "Nonhomogeneous",
    "Scheme",
    "PoissonDiag",
    "ChainParams",
    "Trajectory",
    "EnsembleSummary",
    "MajorantViolation",
    "simulate_hypercube_chain",
    "simulate_lattice_chain",
    "simulate_nonhomogeneous_chain",
    "simulate_scheme_chain",
    "simulate_poisson_diag_chain",
    "simulate",
    "run_ensemble",
    "in_scheme_support",
    "scheme_free_area",
    "holding_rate",
]


class MajorantViolation(ArithmeticError):
    """A proposed birth had intensity above the thinning majorant."""


@dataclass(frozen=True)
class Hypercube:
    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be nonnegative")


@dataclass(frozen=True)
class Lattice:
    j_plus: float
    j_minus: float

    def __post_init__(self):
        if not (self.j_plus > 0 and self.j_minus > 0):
            raise ValueError("lattice rates must be positive")


@dataclass(frozen=True)
class Nonhomogeneous:
    """Walk with level-dependent rates.

    ``rate_sup`` is an optional majorant for the birth intensity.  It may
    be a number or a callable of the configuration.  When omitted the
    exact supremum of ``H(U, ., .)`` is used.
    """

    rates: RateFamily
    rate_sup: Optional[Union[float, Callable]] = None


@dataclass(frozen=True)
class Scheme:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError("scheme needs an integer N >= 3")


@dataclass(frozen=True)
class PoissonDiag:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")


Variant = Union[Hypercube, Lattice, Nonhomogeneous, Scheme, PoissonDiag]


@dataclass(frozen=True)
class ChainParams:
    """Variant, time horizon and master seed of a simulation."""

    variant: Variant
    t_end: float
    seed: int = 0

    def __post_init__(self):
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")


@dataclass
class Trajectory:
    """Event log of one chain run.

    Attributes
    ----------
    initial_state : config or int
    event_times : list of float
        Strictly increasing times of the applied moves.
    ops : list of int
        ``+1`` for an addition (birth), ``-1`` for a removal (death).
    moves : list of tuple
        ``(r, s)`` of each move; ``(None, None)`` for the integer chain.
    t_end : float
    """

    initial_state: object
    event_times: list
    ops: list
    moves: list
    t_end: float

    @property
    def n_events(self) -> int:
        return len(self.event_times)

    @property
    def states(self) -> list:
        """State after each event."""
        out = []
        state = self.initial_state
        for op, (r, s) in zip(self.ops, self.moves):
            if isinstance(state, (int, np.integer)):
                state = state + op
            else:
                state = apply_move(state, r, s)
            out.append(state)
        return out

    @property
    def final_state(self):
        states = self.states
        return states[-1] if states else self.initial_state

    def state_at(self, t: float):
        """State at time ``t`` (right-continuous)."""
        k = int(np.searchsorted(self.event_times, t, side="right"))
        return self.initial_state if k == 0 else self.states[k - 1]

    def holding_times(self):
        """Completed holding times, paired with the state they were spent in."""
        times = [0.0] + list(self.event_times)
        states = [self.initial_state] + self.states
        return [(states[k], times[k + 1] - times[k]) for k in range(len(times) - 1)]

    def to_jsonl(self) -> str:
        lines = []
        for t, op, (r, s) in zip(self.event_times, self.ops, self.moves):
            lines.append(json.dumps({"t": t, "op": "add" if op > 0 else "remove",
                                     "r": r, "s": s}))
        return "\n".join(lines) + ("\n" if lines else "")


def _from_log(initial, log, t_end, integer=False):
    times, ops, moves = [], [], []
    for t, op, r, s in log:
        times.append(t)
        ops.append(op)
        moves.append((None, None) if integer else (r, s))
    return Trajectory(initial, times, ops, moves, t_end)


def _check_t_end(t_end):
    if not t_end >= 0:
        raise ValueError("t_end must be nonnegative")


def holding_rate(variant: Variant, state) -> float:
    """Total event rate of ``variant`` in ``state``.

    For the nonhomogeneous chain this is the rate of proposals, that is
    the thinning majorant plus the death rate.
    """
    if isinstance(variant, Hypercube):
        n = len(state.times)
        return 0.5 * variant.alpha ** 2 + n * (n - 1) // 2
    if isinstance(variant, Lattice):
        return variant.j_plus * variant.j_minus + len(state.up) ** 2
    if isinstance(variant, PoissonDiag):
        return variant.lam + state * state
    if isinstance(variant, Scheme):
        N = variant.N
        return scheme_free_area(state, N) / (1 - 2 / N) ** 2 + len(state.up) ** 2
    if isinstance(variant, Nonhomogeneous):
        return _majorant(variant, state) + len(state.up) ** 2
    raise TypeError(f"unknown variant {variant!r}")


def simulate_hypercube_chain(U0: HypercubeConfig, alpha: float, t_end: float,
                             seed) -> Trajectory:
    """Simulate the hypercube bridge chain up to ``t_end``.

    Parameters
    ----------
    U0 : HypercubeConfig
        Initial configuration.
    alpha : float
        Jump rate of the underlying walk; births occur at rate
        ``alpha**2 / 2``.
    t_end : float
        Time horizon.
    seed : int or numpy.random.Generator

    Returns
    -------
    Trajectory
    """
    _check_t_end(t_end)
    Hypercube(alpha)
    gen = as_generator(seed)
    _, _, log = kernels.hypercube_run(gen, list(U0.times), float(alpha),
                                      float(t_end), True)
    return _from_log(U0, log, t_end)


def simulate_lattice_chain(U0: LatticeConfig, j_plus: float, j_minus: float,
                           t_end: float, seed) -> Trajectory:
    """Simulate the bridge chain of the walk on Z with rates ``j_plus``, ``j_minus``."""
    _check_t_end(t_end)
    Lattice(j_plus, j_minus)
    gen = as_generator(seed)
    _, _, log = kernels.lattice_run(gen, list(U0.up), list(U0.down),
                                    float(j_plus), float(j_minus), float(t_end), True)
    return _from_log(U0, log, t_end)


def simulate_poisson_diag_chain(n0: int, lam: float, t_end: float, seed) -> Trajectory:
    """Birth-death chain with birth rate ``lam`` and death rate ``n**2``."""
    _check_t_end(t_end)
    if int(n0) != n0 or n0 < 0:
        raise ValueError("n0 must be a nonnegative integer")
    PoissonDiag(lam)
    gen = as_generator(seed)
    _, _, log = kernels.birth_death_run(gen, int(n0), float(lam), float(t_end), True)
    return _from_log(int(n0), log, t_end, integer=True)


def _majorant(variant: Nonhomogeneous, state: LatticeConfig) -> float:
    if variant.rate_sup is None:
        return math.exp(addition_log_ratio_range(state, variant.rates)[1])
    if callable(variant.rate_sup):
        return float(variant.rate_sup(state))
    return float(variant.rate_sup)


def _pop_pair(up, down, gen):
    m = len(up)
    k = int(math.floor(gen.random() * (m * m)))
    i = k // m
    j = k - i * m
    return up[i], down[j]


def simulate_nonhomogeneous_chain(U0: LatticeConfig, rates: RateFamily, t_end: float,
                                  seed, rate_sup=None) -> Trajectory:
    """Bridge chain of a walk with level-dependent rates.

    Births are generated by thinning: proposals arrive at the majorant
    rate ``Lambda(U)``, are uniform on the unit square, and are accepted
    with probability ``H(U, r, s) / Lambda(U)``.

    Parameters
    ----------
    U0 : LatticeConfig
    rates : RateFamily
    t_end : float
    seed : int or numpy.random.Generator
    rate_sup : float or callable, optional
        Majorant for ``H``.  Defaults to the exact supremum over the
        unit square, computed per state.

    Raises
    ------
    MajorantViolation
        If a proposal has ``H`` above the majorant.
    """
    _check_t_end(t_end)
    variant = Nonhomogeneous(rates, rate_sup)
    gen = as_generator(seed)
    state = U0
    t = 0.0
    log = []
    while True:
        m = len(state.up)
        lam = _majorant(variant, state)
        if not lam > 0 or not math.isfinite(lam):
            raise MajorantViolation(f"invalid majorant {lam!r}")
        rate = lam + m * m
        t += -math.log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < lam:
            r = gen.random()
            s = gen.random()
            if r == s or r <= 0.0 or s <= 0.0:
                continue
            moved = apply_move(state, r, s)
            if moved is state:
                continue
            h = density_ratio_H(state, r, s, rates)
            if h > lam * (1.0 + 1e-9):
                raise MajorantViolation(
                    f"H = {h!r} exceeds majorant {lam!r} at (r, s) = ({r!r}, {s!r})")
            if gen.random() * lam >= h:
                continue
            state = moved
            log.append((t, 1, r, s))
        else:
            r, s = _pop_pair(state.up, state.down, gen)
            state = apply_move(state, r, s)
            log.append((t, -1, r, s))
    return _from_log(U0, log, t_end)


def _blocks(times, N):
    return [math.ceil(t * N) for t in times]


def in_scheme_support(U: LatticeConfig, N: int) -> bool:
    """True when every block ``((j-1)/N, j/N]`` holds at most one jump."""
    blocks = _blocks(U.up + U.down, N)
    return len(set(blocks)) == len(blocks)


def scheme_free_area(U: LatticeConfig, N: int) -> float:
    """Area of admissible birth locations ``F (F - 1) / N**2``.

    ``F`` is the number of blocks free of jumps; a birth needs two
    distinct free blocks.
    """
    F = N - len(U.up) - len(U.down)
    return F * (F - 1) / (N * N)


def simulate_scheme_chain(U0: LatticeConfig, N: int, t_end: float, seed) -> Trajectory:
    """Chain whose invariant law is the discretised bridge with ``N`` steps.

    Births happen at rate ``(1 - 2/N)**-2`` times the admissible area and
    place ``(r, s)`` uniformly on the admissible set, sampled by rejection
    from the unit square.

    Raises
    ------
    ValueError
        If ``U0`` has two jumps in the same block.
    """
    _check_t_end(t_end)
    Scheme(N)
    if not in_scheme_support(U0, N):
        raise ValueError("initial configuration has two jumps in one block")
    gen = as_generator(seed)
    scale = 1.0 / (1.0 - 2.0 / N) ** 2
    up = list(U0.up)
    down = list(U0.down)
    occupied = set(_blocks(up + down, N))
    t = 0.0
    log = []
    while True:
        m = len(up)
        F = N - 2 * m
        birth = scale * F * (F - 1) / (N * N)
        rate = birth + m * m
        if rate <= 0.0:
            break
        t += -math.log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < birth:
            while True:
                r = gen.random()
                s = gen.random()
                br = math.ceil(r * N)
                bs = math.ceil(s * N)
                if br != bs and br > 0 and bs > 0 and br not in occupied and bs not in occupied:
                    break
            up.append(r)
            down.append(s)
            occupied.update((br, bs))
            log.append((t, 1, r, s))
        else:
            k = int(math.floor(gen.random() * (m * m)))
            i = k // m
            j = k - i * m
            up_sorted = sorted(up)
            down_sorted = sorted(down)
            r = up_sorted[i]
            s = down_sorted[j]
            up.remove(r)
            down.remove(s)
            occupied.difference_update((math.ceil(r * N), math.ceil(s * N)))
            log.append((t, -1, r, s))
    return _from_log(U0, log, t_end)


def simulate(params: ChainParams, initial) -> Trajectory:
    """Dispatch to the simulator of ``params.variant``."""
    v = params.variant
    seed = params.seed
    if isinstance(v, Hypercube):
        return simulate_hypercube_chain(initial, v.alpha, params.t_end, seed)
    if isinstance(v, Lattice):
        return simulate_lattice_chain(initial, v.j_plus, v.j_minus, params.t_end, seed)
    if isinstance(v, Nonhomogeneous):
        return simulate_nonhomogeneous_chain(initial, v.rates, params.t_end, seed,
                                             v.rate_sup)
    if isinstance(v, Scheme):
        return simulate_scheme_chain(initial, v.N, params.t_end, seed)
    if isinstance(v, PoissonDiag):
        return simulate_poisson_diag_chain(initial, v.lam, params.t_end, seed)
    raise TypeError(f"unknown variant {v!r}")


@dataclass
class EnsembleSummary:
    """Final states of independent replicas.

    Attributes
    ----------
    sizes : numpy.ndarray
        Pair count at ``t_end`` (``|U|/2`` on the hypercube, ``|U+|`` on
        the lattice, ``n`` for the integer chain).
    n_events : numpy.ndarray
        Number of applied moves per replica.
    final_states : list or None
        Final configurations, kept only on request.
    """

    sizes: np.ndarray
    n_events: np.ndarray
    final_states: Optional[list] = None
    header: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.header:
            buf.write("# provenance: " + json.dumps(self.header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica", "t_end_state_size", "n_events"])
        for i, (s, n) in enumerate(zip(self.sizes, self.n_events)):
            w.writerow([i, int(s), int(n)])
        return buf.getvalue()


def _size(state):
    if isinstance(state, HypercubeConfig):
        return len(state.times) // 2
    if isinstance(state, LatticeConfig):
        return len(state.up)
    return int(state)


def _run_block(params: ChainParams, initial, start: int, stop: int, keep_states: bool):
    v = params.variant
    t_end = float(params.t_end)
    sizes = np.empty(stop - start, dtype=np.int64)
    events = np.empty(stop - start, dtype=np.int64)
    finals = [] if keep_states else None
    for k, rep in enumerate(range(start, stop)):
        gen = replica_generator(params.seed, rep)
        if isinstance(v, Hypercube):
            times, n_ev, _ = kernels.hypercube_run(gen, list(initial.times), float(v.alpha),
                                                   t_end, False)
            sizes[k] = len(times) // 2
            final = HypercubeConfig(tuple(times)) if keep_states else None
        elif isinstance(v, Lattice):
            (up, down), n_ev, _ = kernels.lattice_run(gen, list(initial.up), list(initial.down),
                                                      float(v.j_plus), float(v.j_minus),
                                                      t_end, False)
            sizes[k] = len(up)
            final = LatticeConfig(tuple(up), tuple(down)) if keep_states else None
        elif isinstance(v, PoissonDiag):
            n, n_ev, _ = kernels.birth_death_run(gen, int(initial), float(v.lam), t_end, False)
            sizes[k] = n
            final = n
        else:
            if isinstance(v, Nonhomogeneous):
                traj = simulate_nonhomogeneous_chain(initial, v.rates, t_end, gen, v.rate_sup)
            else:
                traj = simulate_scheme_chain(initial, v.N, t_end, gen)
            final = traj.final_state
            n_ev = traj.n_events
            sizes[k] = _size(final)
        events[k] = n_ev
        if keep_states:
            finals.append(final)
    return sizes, events, finals


def _workers(requested):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("BRIDGE_STEIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError("BRIDGE_STEIN_THREADS must be an integer") from exc
    return 1


def run_ensemble(params: ChainParams, initial, replicas: int, keep_states: bool = False,
                 workers: Optional[int] = None) -> EnsembleSummary:
    """Run ``replicas`` independent copies of a chain.

    Replica ``i`` uses the stream ``replica_generator(params.seed, i)``, so
    the result does not depend on the number of workers.

    Parameters
    ----------
    params : ChainParams
    initial : configuration or int
    replicas : int
    keep_states : bool
        Also return the final configurations.
    workers : int, optional
        Process count.  Defaults to ``BRIDGE_STEIN_THREADS`` or 1.  Only
        variants with picklable parameters can use more than one worker.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    n_workers = min(_workers(workers), replicas)
    if n_workers == 1 or isinstance(params.variant, Nonhomogeneous):
        sizes, events, finals = _run_block(params, initial, 0, replicas, keep_states)
        return EnsembleSummary(sizes, events, finals)
    bounds = np.linspace(0, replicas, n_workers + 1).astype(int)
    with ProcessPoolExecutor(n_workers) as pool:
        parts = list(pool.map(_run_block, [params] * n_workers, [initial] * n_workers,
                              bounds[:-1].tolist(), bounds[1:].tolist(),
                              [keep_states] * n_workers))
    sizes = np.concatenate([p[0] for p in parts])
    events = np.concatenate([p[1] for p in parts])
    finals = sum((p[2] for p in parts), []) if keep_states else None
    return EnsembleSummary(sizes, events, finals)
