# cython: language_level=3
"""Compiled Gillespie kernels.

Line-for-line twin of ``_kernels_py``.  Uniforms come straight from the
generator's ``bitgen_t.next_double``, which is what ``Generator.random``
returns, so both backends consume the same stream and agree bit for bit.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log1p, floor
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memmove
from numpy.random cimport bitgen_t

import numpy as np


cdef const char *CAPSULE_NAME = "BitGenerator"


cdef bitgen_t *_bitgen(gen) except NULL:
    capsule = gen.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef inline double _uniform(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef struct DArray:
    double *data
    Py_ssize_t size
    Py_ssize_t cap


cdef int _da_init(DArray *a, seq) except -1:
    cdef Py_ssize_t n = len(seq), i
    a.cap = n + 16
    a.size = n
    a.data = <double *> malloc(a.cap * sizeof(double))
    if a.data == NULL:
        raise MemoryError()
    for i in range(n):
        a.data[i] = seq[i]
    return 0


cdef list _da_list(DArray *a):
    return [a.data[i] for i in range(a.size)]


cdef Py_ssize_t _lower(DArray *a, double t) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.size, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a.data[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef bint _member(DArray *a, double t) noexcept nogil:
    cdef Py_ssize_t i = _lower(a, t)
    return i < a.size and a.data[i] == t


cdef int _insert(DArray *a, double t) except -1:
    cdef Py_ssize_t i
    cdef double *tmp
    if a.size == a.cap:
        a.cap = 2 * a.cap + 16
        tmp = <double *> realloc(a.data, a.cap * sizeof(double))
        if tmp == NULL:
            raise MemoryError()
        a.data = tmp
    i = _lower(a, t)
    memmove(&a.data[i + 1], &a.data[i], (a.size - i) * sizeof(double))
    a.data[i] = t
    a.size += 1
    return 0


cdef double _pop(DArray *a, Py_ssize_t i) noexcept nogil:
    cdef double v = a.data[i]
    memmove(&a.data[i], &a.data[i + 1], (a.size - i - 1) * sizeof(double))
    a.size -= 1
    return v


def hypercube_run(gen, times, double alpha, double t_end, bint record):
    cdef bitgen_t *bg = _bitgen(gen)
    cdef DArray a
    cdef double birth = 0.5 * alpha * alpha
    cdef double t = 0.0, rate, r, s, tmp
    cdef long long n_events = 0
    cdef Py_ssize_t n, n_pairs, k, i, j, row
    cdef int op
    log = [] if record else None
    _da_init(&a, list(times))
    try:
        while True:
            n = a.size
            n_pairs = n * (n - 1) // 2
            rate = birth + n_pairs
            if rate <= 0.0:
                break
            t += -log1p(-_uniform(bg)) / rate
            if t > t_end:
                break
            if _uniform(bg) * rate < birth:
                r = _uniform(bg)
                s = _uniform(bg)
                if r > s:
                    tmp = r
                    r = s
                    s = tmp
                if r == s or r <= 0.0 or _member(&a, r) or _member(&a, s):
                    continue
                _insert(&a, r)
                _insert(&a, s)
                op = 1
            else:
                k = <Py_ssize_t> floor(_uniform(bg) * n_pairs)
                i = 0
                row = n - 1
                while k >= row:
                    k -= row
                    i += 1
                    row -= 1
                j = i + 1 + k
                s = _pop(&a, j)
                r = _pop(&a, i)
                op = -1
            n_events += 1
            if record:
                log.append((t, op, r, s))
        return _da_list(&a), n_events, log
    finally:
        free(a.data)


def lattice_run(gen, up, down, double j_plus, double j_minus, double t_end,
                bint record):
    cdef bitgen_t *bg = _bitgen(gen)
    cdef DArray u, d
    cdef double birth = j_plus * j_minus
    cdef double t = 0.0, rate, r, s
    cdef long long n_events = 0
    cdef Py_ssize_t m, deaths, k, i, j
    cdef int op
    log = [] if record else None
    _da_init(&u, list(up))
    try:
        _da_init(&d, list(down))
    except BaseException:
        free(u.data)
        raise
    try:
        while True:
            m = u.size
            deaths = m * m
            rate = birth + deaths
            if rate <= 0.0:
                break
            t += -log1p(-_uniform(bg)) / rate
            if t > t_end:
                break
            if _uniform(bg) * rate < birth:
                r = _uniform(bg)
                s = _uniform(bg)
                if (r == s or r <= 0.0 or s <= 0.0 or _member(&u, r)
                        or _member(&d, r) or _member(&u, s) or _member(&d, s)):
                    continue
                _insert(&u, r)
                _insert(&d, s)
                op = 1
            else:
                k = <Py_ssize_t> floor(_uniform(bg) * deaths)
                i = k // m
                j = k - i * m
                r = _pop(&u, i)
                s = _pop(&d, j)
                op = -1
            n_events += 1
            if record:
                log.append((t, op, r, s))
        return (_da_list(&u), _da_list(&d)), n_events, log
    finally:
        free(u.data)
        free(d.data)


def birth_death_run(gen, long long n, double lam, double t_end, bint record):
    cdef bitgen_t *bg = _bitgen(gen)
    cdef double t = 0.0, rate, deaths
    cdef long long n_events = 0
    cdef int op
    log = [] if record else None
    while True:
        deaths = <double> (n * n)
        rate = lam + deaths
        if rate <= 0.0:
            break
        t += -log1p(-_uniform(bg)) / rate
        if t > t_end:
            break
        if _uniform(bg) * rate < lam:
            n += 1
            op = 1
        else:
            n -= 1
            op = -1
        n_events += 1
        if record:
            log.append((t, op, 0.0, 0.0))
    return n, n_events, log


cdef tuple _flatten(list seqs):
    cdef Py_ssize_t n = len(seqs), i
    offsets = np.zeros(n + 1, dtype=np.intp)
    for i in range(n):
        offsets[i + 1] = offsets[i] + len(seqs[i])
    flat = np.empty(offsets[n], dtype=np.float64)
    for i in range(n):
        flat[offsets[i]:offsets[i + 1]] = seqs[i]
    return flat, offsets


cdef Py_ssize_t _common(const double *x, Py_ssize_t nx,
                        const double *y, Py_ssize_t ny) noexcept nogil:
    cdef Py_ssize_t i = 0, j = 0, c = 0
    while i < nx and j < ny:
        if x[i] < y[j]:
            i += 1
        elif y[j] < x[i]:
            j += 1
        else:
            c += 1
            i += 1
            j += 1
    return c


def hypercube_distance_matrix(a_list, b_list):
    cdef double[::1] fa, fb
    cdef Py_ssize_t[::1] oa, ob
    fa_, oa_ = _flatten([list(x) for x in a_list])
    fb_, ob_ = _flatten([list(x) for x in b_list])
    fa = fa_
    fb = fb_
    oa = oa_
    ob = ob_
    cdef Py_ssize_t na = len(a_list), nb = len(b_list), i, j, la, lb, c, p, q, dist
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] res = out
    with nogil:
        for i in range(na):
            la = oa[i + 1] - oa[i]
            for j in range(nb):
                lb = ob[j + 1] - ob[j]
                c = _common(&fa[0] + oa[i], la, &fb[0] + ob[j], lb) if la and lb else 0
                p = la - c
                q = lb - c
                dist = (p + q) // 2
                if p % 2:
                    dist += 1
                res[i, j] = dist
    return out


def lattice_distance_matrix(a_list, b_list):
    cdef double[::1] fau, fad, fbu, fbd
    cdef Py_ssize_t[::1] oa, ob
    fau_, oa_ = _flatten([list(x[0]) for x in a_list])
    fad_, _ = _flatten([list(x[1]) for x in a_list])
    fbu_, ob_ = _flatten([list(x[0]) for x in b_list])
    fbd_, _ = _flatten([list(x[1]) for x in b_list])
    fau = fau_
    fad = fad_
    fbu = fbu_
    fbd = fbd_
    oa = oa_
    ob = ob_
    cdef Py_ssize_t na = len(a_list), nb = len(b_list), i, j, la, lb, cu, cd
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] res = out
    with nogil:
        for i in range(na):
            la = oa[i + 1] - oa[i]
            for j in range(nb):
                lb = ob[j + 1] - ob[j]
                if la and lb:
                    cu = _common(&fau[0] + oa[i], la, &fbu[0] + ob[j], lb)
                    cd = _common(&fad[0] + oa[i], la, &fbd[0] + ob[j], lb)
                else:
                    cu = 0
                    cd = 0
                res[i, j] = max(la - cu, la - cd) + max(lb - cu, lb - cd)
    return out
