"""Pure-Python Gillespie kernels.

Each function mirrors its counterpart in ``_ckernels.pyx`` operation for
operation so that both backends produce bit-identical output from the same
generator.  The only randomness consumed is ``Generator.random()``;
exponential holding times are obtained by inversion.

Every run returns ``(final_state, n_events, log)`` where ``log`` is ``None``
unless ``record`` is true, in which case it is a list of
``(t, op, r, s)`` tuples with ``op`` equal to ``1`` for an addition and
``-1`` for a removal.
"""

from bisect import bisect_left, insort
from math import log1p, floor

import numpy as np


def _member(times, t):
    i = bisect_left(times, t)
    return i < len(times) and times[i] == t


def hypercube_run(gen, times, alpha, t_end, record):
    times = list(times)
    birth = 0.5 * alpha * alpha
    t = 0.0
    n_events = 0
    log = [] if record else None
    while True:
        n = len(times)
        n_pairs = n * (n - 1) // 2
        rate = birth + n_pairs
        if rate <= 0.0:
            break
        t += -log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < birth:
            r = gen.random()
            s = gen.random()
            if r > s:
                r, s = s, r
            if r == s or r <= 0.0 or _member(times, r) or _member(times, s):
                continue
            insort(times, r)
            insort(times, s)
            op = 1
        else:
            k = int(floor(gen.random() * n_pairs))
            i = 0
            row = n - 1
            while k >= row:
                k -= row
                i += 1
                row -= 1
            j = i + 1 + k
            r = times[i]
            s = times[j]
            del times[j]
            del times[i]
            op = -1
        n_events += 1
        if record:
            log.append((t, op, r, s))
    return times, n_events, log


def lattice_run(gen, up, down, j_plus, j_minus, t_end, record):
    up = list(up)
    down = list(down)
    birth = j_plus * j_minus
    t = 0.0
    n_events = 0
    log = [] if record else None
    while True:
        m = len(up)
        deaths = m * m
        rate = birth + deaths
        if rate <= 0.0:
            break
        t += -log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < birth:
            r = gen.random()
            s = gen.random()
            if (r == s or r <= 0.0 or s <= 0.0 or _member(up, r)
                    or _member(down, r) or _member(up, s) or _member(down, s)):
                continue
            insort(up, r)
            insort(down, s)
            op = 1
        else:
            k = int(floor(gen.random() * deaths))
            i = k // m
            j = k - i * m
            r = up.pop(i)
            s = down.pop(j)
            op = -1
        n_events += 1
        if record:
            log.append((t, op, r, s))
    return (up, down), n_events, log


def birth_death_run(gen, n, lam, t_end, record):
    t = 0.0
    n_events = 0
    log = [] if record else None
    while True:
        deaths = float(n * n)
        rate = lam + deaths
        if rate <= 0.0:
            break
        t += -log1p(-gen.random()) / rate
        if t > t_end:
            break
        if gen.random() * rate < lam:
            n += 1
            op = 1
        else:
            n -= 1
            op = -1
        n_events += 1
        if record:
            log.append((t, op, 0.0, 0.0))
    return n, n_events, log


def hypercube_distance_matrix(a_list, b_list):
    out = np.empty((len(a_list), len(b_list)), dtype=np.float64)
    b_sets = [set(b) for b in b_list]
    for i, a in enumerate(a_list):
        sa = set(a)
        for j, sb in enumerate(b_sets):
            p = len(sa - sb)
            q = len(sb - sa)
            d = (p + q) // 2
            out[i, j] = d if p % 2 == 0 else d + 1
    return out


def lattice_distance_matrix(a_list, b_list):
    out = np.empty((len(a_list), len(b_list)), dtype=np.float64)
    b_sets = [(set(u), set(d)) for u, d in b_list]
    for i, (au, ad) in enumerate(a_list):
        su, sd = set(au), set(ad)
        for j, (bu, bd) in enumerate(b_sets):
            out[i, j] = max(len(su - bu), len(sd - bd)) + max(len(bu - su), len(bd - sd))
    return out
