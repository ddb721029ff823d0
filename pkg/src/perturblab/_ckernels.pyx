# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Mirrors ``_pykernels`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil


def _sq_shape(n, size, obj):
    return (n, size) if obj == 0 else (1, 1)


cdef void _subset_costs(const double[:, ::1] d, int obj, double[::1] out,
                        double[:, ::1] row, double[:, ::1] sqrow) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    cdef Py_ssize_t b, t, s, c, lo
    cdef double v, best
    for c in range(n):
        row[c, 0] = 0.0
        if obj == 0:
            sqrow[c, 0] = 0.0
    out[0] = 0.0
    for b in range(n):
        lo = (<Py_ssize_t>1) << b
        for t in range(lo):
            s = t | lo
            for c in range(n):
                row[c, s] = row[c, t] + d[b, c]
                if obj == 0:
                    sqrow[c, s] = sqrow[c, t] + d[b, c] * d[b, c]
            if obj == 0:
                out[s] = out[t] + sqrow[b, t]
            elif obj == 2:
                out[s] = out[t] + row[b, t]
    if obj == 0:
        for s in range(1, size):
            out[s] = out[s] / <double>popcount64(<unsigned long long>s)
    elif obj == 1:
        for s in range(1, size):
            best = INFINITY
            for c in range(n):
                if (s >> c) & 1:
                    v = row[c, s]
                    if v < best:
                        best = v
            out[s] = best


def subset_costs(d, int obj):
    cdef const double[:, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    out = np.zeros(size)
    row = np.zeros((n, size))
    sqrow = np.zeros(_sq_shape(n, size, obj))
    cdef double[::1] ov = out
    cdef double[:, ::1] rv = row
    cdef double[:, ::1] qv = sqrow
    with nogil:
        _subset_costs(dv, obj, ov, rv, qv)
    return out


cdef Py_ssize_t _best(const double[::1] sc, const int64_t[:, ::1] masks, double rtol,
                      double[::1] cost, double *best_cost) noexcept nogil:
    cdef Py_ssize_t P = masks.shape[0]
    cdef Py_ssize_t k = masks.shape[1]
    cdef Py_ssize_t p, j
    cdef double c, m = INFINITY, thr
    for p in range(P):
        c = sc[masks[p, 0]]
        for j in range(1, k):
            c = c + sc[masks[p, j]]
        cost[p] = c
        if c < m:
            m = c
    thr = m + rtol * (1.0 + fabs(m))
    for p in range(P):
        if cost[p] <= thr:
            best_cost[0] = cost[p]
            return p
    best_cost[0] = m
    return 0


def partition_costs(sc, masks):
    cdef const double[::1] scv = np.ascontiguousarray(sc, dtype=np.float64)
    cdef const int64_t[:, ::1] mv = np.ascontiguousarray(masks, dtype=np.int64)
    cdef Py_ssize_t P = mv.shape[0], k = mv.shape[1], p, j
    out = np.empty(P)
    cdef double[::1] ov = out
    cdef double c
    with nogil:
        for p in range(P):
            c = scv[mv[p, 0]]
            for j in range(1, k):
                c = c + scv[mv[p, j]]
            ov[p] = c
    return out


def best_index(sc, masks, double rtol):
    cdef const double[::1] scv = np.ascontiguousarray(sc, dtype=np.float64)
    cdef const int64_t[:, ::1] mv = np.ascontiguousarray(masks, dtype=np.int64)
    cost = np.empty(mv.shape[0])
    cdef double[::1] cv = cost
    cdef double bc
    cdef Py_ssize_t idx
    with nogil:
        idx = _best(scv, mv, rtol, cv, &bc)
    return int(idx), bc


cdef class ExactArgmin:
    """Reusable buffers for repeated exact optimisation on one (n, k, objective)."""
    cdef int obj
    cdef double rtol
    cdef object masks, sc, row, sqrow, cost

    def __init__(self, int n, int obj, masks, double rtol):
        size = 1 << n
        self.obj = obj
        self.rtol = rtol
        self.masks = np.ascontiguousarray(masks, dtype=np.int64)
        self.sc = np.zeros(size)
        self.row = np.zeros((n, size))
        self.sqrow = np.zeros(_sq_shape(n, size, obj))
        self.cost = np.empty(self.masks.shape[0])

    def __call__(self, d):
        cdef const double[:, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
        cdef double[::1] sc = self.sc
        cdef double[:, ::1] row = self.row
        cdef double[:, ::1] sqrow = self.sqrow
        cdef double[::1] cost = self.cost
        cdef const int64_t[:, ::1] mv = self.masks
        cdef double bc
        cdef Py_ssize_t idx
        cdef int obj = self.obj
        cdef double rtol = self.rtol
        with nogil:
            _subset_costs(dv, obj, sc, row, sqrow)
            idx = _best(sc, mv, rtol, cost, &bc)
        return int(idx), bc

    def batch(self, mats):
        """Argmin index for each matrix in a (B, n, n) stack."""
        cdef const double[:, :, ::1] dv = np.ascontiguousarray(mats, dtype=np.float64)
        cdef Py_ssize_t B = dv.shape[0], p
        out = np.empty(B, dtype=np.int64)
        cdef int64_t[::1] ov = out
        cdef double[::1] sc = self.sc
        cdef double[:, ::1] row = self.row
        cdef double[:, ::1] sqrow = self.sqrow
        cdef double[::1] cost = self.cost
        cdef const int64_t[:, ::1] mv = self.masks
        cdef double bc
        cdef int obj = self.obj
        cdef double rtol = self.rtol
        with nogil:
            for p in range(B):
                _subset_costs(dv[p], obj, sc, row, sqrow)
                ov[p] = _best(sc, mv, rtol, cost, &bc)
        return out


def exact_argmin(d, int obj, masks, double rtol):
    n = np.asarray(d).shape[0]
    return ExactArgmin(n, obj, masks, rtol)(d)


def disagreement_counts(masks, ref):
    cdef const int64_t[:, ::1] mv = np.ascontiguousarray(masks, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(ref, dtype=np.int64)
    cdef Py_ssize_t P = mv.shape[0], k = mv.shape[1], kr = rv.shape[0]
    cdef Py_ssize_t p, b, j
    cdef int64_t together, ref_together = 0, both, c
    out = np.empty(P, dtype=np.int64)
    cdef int64_t[::1] ov = out
    with nogil:
        for j in range(kr):
            c = popcount64(<unsigned long long>rv[j])
            ref_together += c * (c - 1) // 2
        for p in range(P):
            together = 0
            both = 0
            for b in range(k):
                c = popcount64(<unsigned long long>mv[p, b])
                together += c * (c - 1) // 2
                for j in range(kr):
                    c = popcount64(<unsigned long long>(mv[p, b] & rv[j]))
                    both += c * (c - 1) // 2
            ov[p] = together + ref_together - 2 * both
    return out


def linkage(d, int k, int method):
    cdef const double[:, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0]
    cdef Py_ssize_t steps = n - k
    L_arr = np.array(dv, dtype=np.float64)
    S_arr = np.array(dv, dtype=np.float64)
    cdef double[:, ::1] L = L_arr
    cdef double[:, ::1] S = S_arr
    sizes_arr = np.ones(n, dtype=np.int64)
    cdef int64_t[::1] sizes = sizes_arr
    active_arr = np.ones(n, dtype=np.int8)
    cdef signed char[::1] active = active_arr
    owner_arr = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] owner = owner_arr
    ranks_arr = np.zeros((steps, 2), dtype=np.int64)
    cdef int64_t[:, ::1] ranks = ranks_arr
    dists_arr = np.zeros(steps)
    cdef double[::1] dists = dists_arr
    cdef Py_ssize_t step, i, j, a, b, m, bi, bj
    cdef double v, best, nv
    cdef int64_t r
    with nogil:
        for step in range(steps):
            best = INFINITY
            bi = -1
            bj = -1
            for a in range(n):
                if not active[a]:
                    continue
                for b in range(a + 1, n):
                    if not active[b]:
                        continue
                    v = L[a, b]
                    if v < best or bi < 0:
                        best = v
                        bi = a
                        bj = b
            i = bi
            j = bj
            dists[step] = best
            r = 0
            for a in range(i):
                r += active[a]
            ranks[step, 0] = r
            r = 0
            for a in range(j):
                r += active[a]
            ranks[step, 1] = r
            if method == 1:
                sizes[i] += sizes[j]
            for m in range(n):
                if method == 0:
                    nv = L[i, m] if L[i, m] <= L[j, m] else L[j, m]
                elif method == 2:
                    nv = L[i, m] if L[i, m] >= L[j, m] else L[j, m]
                else:
                    S[i, m] = S[i, m] + S[j, m]
                    nv = S[i, m] / <double>(sizes[i] * sizes[m])
                L[i, m] = nv
            for m in range(n):
                L[m, i] = L[i, m]
                if method == 1:
                    S[m, i] = S[i, m]
            active[j] = 0
            for m in range(n):
                if owner[m] == j:
                    owner[m] = i
    rank_of = np.cumsum(active_arr.astype(np.int64)) - 1
    labels = rank_of[owner_arr].astype(np.int64)
    return labels, ranks_arr, dists_arr
