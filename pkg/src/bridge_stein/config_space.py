"""Jump-time configuration spaces, pair moves and the graph metric.

A bridge on ``[0, 1]`` that starts and ends at zero is encoded by the
times at which it jumps.  Two encodings are used:

* :class:`HypercubeConfig` for the random walk on the hypercube, where
  every jump flips the state and a bridge needs an even number of jumps;
* :class:`LatticeConfig` for walks on the integers, where upward and
  downward jumps are stored separately and must balance.

Moves add or remove a pair of jump times.  The graph metric counts the
minimal number of such moves between two configurations.
"""

from __future__ import annotations

import bisect
import json
from collections import deque
from dataclasses import dataclass
from typing import Union

__all__ = [
    "HypercubeConfig",
    "LatticeConfig",
    "PathZ",
    "apply_move",
    "reconstruct_path",
    "graph_distance",
    "graph_distance_bfs",
    "config_to_json",
    "config_from_json",
    "BFS_MAX_POINTS",
]

#: Largest number of points per side accepted by the BFS oracle.
BFS_MAX_POINTS = 8


def _check_times(times, name):
    out = tuple(float(t) for t in times)
    for t in out:
        if not 0.0 < t < 1.0:
            raise ValueError(f"{name}: time {t!r} is not inside (0, 1)")
    for x, y in zip(out, out[1:]):
        if not x < y:
            raise ValueError(f"{name}: times must be strictly increasing")
    return out


@dataclass(frozen=True)
class HypercubeConfig:
    """Even-cardinality set of jump times in ``(0, 1)``.

    Parameters
    ----------
    times : tuple of float
        Strictly increasing times.  Unsorted input is sorted; duplicates
        are rejected.
    """

    times: tuple = ()

    def __post_init__(self):
        times = tuple(sorted(float(t) for t in self.times))
        times = _check_times(times, "HypercubeConfig")
        if len(times) % 2:
            raise ValueError("HypercubeConfig needs an even number of times")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return len(self.times)

    @property
    def n_pairs(self) -> int:
        return len(self.times) // 2

    def __contains__(self, t):
        i = bisect.bisect_left(self.times, t)
        return i < len(self.times) and self.times[i] == t


@dataclass(frozen=True)
class LatticeConfig:
    """Upward and downward jump times of a bridge on the integers.

    Parameters
    ----------
    up : tuple of float
        Times of ``+1`` jumps.
    down : tuple of float
        Times of ``-1`` jumps.  Must have the same length as ``up`` and
        share no time with it.
    """

    up: tuple = ()
    down: tuple = ()

    def __post_init__(self):
        up = _check_times(sorted(float(t) for t in self.up), "LatticeConfig.up")
        down = _check_times(sorted(float(t) for t in self.down), "LatticeConfig.down")
        if len(up) != len(down):
            raise ValueError("LatticeConfig needs |up| == |down|")
        if set(up) & set(down):
            raise ValueError("LatticeConfig: a time appears in both up and down")
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)

    def __len__(self):
        return len(self.up)

    @property
    def n_pairs(self) -> int:
        return len(self.up)


Config = Union[HypercubeConfig, LatticeConfig]


@dataclass(frozen=True)
class PathZ:
    """Piecewise-constant integer path on ``[0, 1]`` given by its jumps.

    Attributes
    ----------
    jump_times : tuple of float
        Sorted jump times.
    jump_signs : tuple of int
        ``+1`` or ``-1`` for each jump.
    """

    jump_times: tuple
    jump_signs: tuple

    def __post_init__(self):
        if len(self.jump_times) != len(self.jump_signs):
            raise ValueError("jump_times and jump_signs differ in length")
        if any(s not in (1, -1) for s in self.jump_signs):
            raise ValueError("jump signs must be +1 or -1")
        if sum(self.jump_signs) != 0:
            raise ValueError("a bridge path must return to 0")

    def levels(self):
        """Values of the path on successive intervals, starting at 0."""
        out = [0]
        for s in self.jump_signs:
            out.append(out[-1] + s)
        return out

    def value(self, t: float) -> int:
        """Right-continuous value at time ``t``."""
        k = bisect.bisect_right(self.jump_times, t)
        return sum(self.jump_signs[:k])

    def to_config(self) -> LatticeConfig:
        up = [t for t, s in zip(self.jump_times, self.jump_signs) if s > 0]
        down = [t for t, s in zip(self.jump_times, self.jump_signs) if s < 0]
        return LatticeConfig(tuple(up), tuple(down))


def _check_move(r, s):
    if r == s:
        raise ValueError("move needs r != s")
    for t in (r, s):
        if not 0.0 < t < 1.0:
            raise ValueError(f"move time {t!r} is not inside (0, 1)")


def _toggle_pair(times, r, s):
    have_r = _member(times, r)
    have_s = _member(times, s)
    if have_r and have_s:
        return tuple(t for t in times if t != r and t != s), True
    if not have_r and not have_s:
        return tuple(sorted(times + (r, s))), True
    return times, False


def _member(times, t):
    i = bisect.bisect_left(times, t)
    return i < len(times) and times[i] == t


def apply_move(config: Config, r: float, s: float) -> Config:
    """Apply the pair move that adds or removes ``{r, s}``.

    Parameters
    ----------
    config : HypercubeConfig or LatticeConfig
    r, s : float
        Distinct times in ``(0, 1)``.  For lattice configurations ``r`` is
        the upward time and ``s`` the downward time.

    Returns
    -------
    same type as ``config``
        Both points added if both are absent, both removed if both are
        present, otherwise ``config`` itself.  The move is an involution.
    """
    r = float(r)
    s = float(s)
    _check_move(r, s)
    if isinstance(config, HypercubeConfig):
        times, changed = _toggle_pair(config.times, r, s)
        return HypercubeConfig(times) if changed else config
    if isinstance(config, LatticeConfig):
        in_up = _member(config.up, r)
        in_down = _member(config.down, s)
        if in_up and in_down:
            up = tuple(t for t in config.up if t != r)
            down = tuple(t for t in config.down if t != s)
            return LatticeConfig(up, down)
        if not in_up and not in_down:
            if _member(config.down, r) or _member(config.up, s):
                return config
            return LatticeConfig(config.up + (r,), config.down + (s,))
        return config
    raise TypeError(f"unsupported configuration type {type(config).__name__}")


def reconstruct_path(config: LatticeConfig) -> PathZ:
    """Rebuild the integer bridge whose jump times are ``config``."""
    if not isinstance(config, LatticeConfig):
        raise TypeError("reconstruct_path needs a LatticeConfig")
    events = sorted([(t, 1) for t in config.up] + [(t, -1) for t in config.down])
    return PathZ(tuple(t for t, _ in events), tuple(s for _, s in events))


def _same_variant(a, b):
    if type(a) is not type(b):
        raise TypeError(
            f"cannot compare {type(a).__name__} with {type(b).__name__}"
        )


def graph_distance(a: Config, b: Config) -> int:
    """Shortest number of pair moves turning ``a`` into ``b``.

    Uses closed forms that were checked exhaustively against
    :func:`graph_distance_bfs` on small configurations.  With
    ``p = |a \\ b|`` and ``q = |b \\ a|`` the hypercube distance is
    ``(p + q) / 2``, plus one when ``p`` is odd (one extra point must be
    brought in and taken out again).  For lattice configurations the two
    sides are coupled: each removal takes one point from each side and
    each addition adds one to each side, so the distance is
    ``max(p+, p-) + max(q+, q-)``.

    Raises
    ------
    TypeError
        If the configurations are of different variants.
    """
    _same_variant(a, b)
    if isinstance(a, HypercubeConfig):
        sa, sb = set(a.times), set(b.times)
        p = len(sa - sb)
        q = len(sb - sa)
        d = (p + q) // 2
        return d if p % 2 == 0 else d + 1
    ua, ub = set(a.up), set(b.up)
    da, db = set(a.down), set(b.down)
    return max(len(ua - ub), len(da - db)) + max(len(ub - ua), len(db - da))


def _bfs(start, target, neighbours):
    if start == target:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        state, dist = queue.popleft()
        for nxt in neighbours(state):
            if nxt == target:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, dist + 1))
    raise RuntimeError("target unreachable in the move graph")


def _hypercube_bfs(n_shared, n_only_a, n_b):
    # State (i, j): i points of b present, j points outside b present.
    j_cap = n_only_a + n_b + 4

    def neighbours(state):
        i, j = state
        for di, dj in ((2, 0), (1, 1), (0, 2)):
            if i + di <= n_b and j + dj <= j_cap:
                yield (i + di, j + dj)
            if i - di >= 0 and j - dj >= 0:
                yield (i - di, j - dj)

    return _bfs((n_shared, n_only_a), (n_b, 0), neighbours)


def _side_moves(i, j, n_b, j_cap, sign):
    if sign > 0:
        if i < n_b:
            yield i + 1, j
        if j < j_cap:
            yield i, j + 1
    else:
        if i > 0:
            yield i - 1, j
        if j > 0:
            yield i, j - 1


def _lattice_bfs(start, nb_up, nb_down):
    j_cap = max(start[1], start[3]) + nb_up + nb_down + 4

    def neighbours(state):
        iu, ju, idn, jd = state
        for sign in (1, -1):
            for ui, uj in _side_moves(iu, ju, nb_up, j_cap, sign):
                for di, dj in _side_moves(idn, jd, nb_down, j_cap, sign):
                    yield (ui, uj, di, dj)

    return _bfs(start, (nb_up, 0, nb_down, 0), neighbours)


def graph_distance_bfs(a: Config, b: Config) -> int:
    """Exact graph distance by breadth-first search.

    Only the membership pattern matters, so the search runs on the
    quotient state that counts how many points of the current
    configuration lie in ``b`` and how many lie outside it.

    Raises
    ------
    ValueError
        If either configuration has more than ``BFS_MAX_POINTS`` points
        on one side.
    """
    _same_variant(a, b)
    if isinstance(a, HypercubeConfig):
        if max(len(a.times), len(b.times)) > BFS_MAX_POINTS:
            raise ValueError("configuration too large for the BFS oracle")
        sa, sb = set(a.times), set(b.times)
        return _hypercube_bfs(len(sa & sb), len(sa - sb), len(sb))
    if max(len(a.up), len(b.up)) > BFS_MAX_POINTS:
        raise ValueError("configuration too large for the BFS oracle")
    ua, ub = set(a.up), set(b.up)
    da, db = set(a.down), set(b.down)
    start = (len(ua & ub), len(ua - ub), len(da & db), len(da - db))
    return _lattice_bfs(start, len(ub), len(db))


def config_to_dict(config: Config) -> dict:
    """JSON-ready dictionary for a configuration."""
    if isinstance(config, HypercubeConfig):
        return {"times": list(config.times)}
    if isinstance(config, LatticeConfig):
        return {"up": list(config.up), "down": list(config.down)}
    raise TypeError(f"unsupported configuration type {type(config).__name__}")


def config_from_dict(data: dict) -> Config:
    """Inverse of :func:`config_to_dict`."""
    if "times" in data:
        return HypercubeConfig(tuple(data["times"]))
    if "up" in data and "down" in data:
        return LatticeConfig(tuple(data["up"]), tuple(data["down"]))
    raise ValueError("configuration JSON needs 'times' or 'up'/'down'")


def config_to_json(config: Config) -> str:
    return json.dumps(config_to_dict(config))


def config_from_json(text: str) -> Config:
    return config_from_dict(json.loads(text))
