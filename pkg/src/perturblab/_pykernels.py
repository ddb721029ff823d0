"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating point operation order, so both backends return
bit-identical results.  Objective codes: 0 kmeans, 1 kmedoids, 2 minsum.
Linkage codes: 0 single, 1 average, 2 complete.
"""

import numpy as np

KMEANS, KMEDOIDS, MINSUM = 0, 1, 2
SINGLE, AVERAGE, COMPLETE = 0, 1, 2


def subset_costs(d, obj):
    """Cost of every subset of points as a single block, indexed by bitmask."""
    d = np.ascontiguousarray(d, dtype=np.float64)
    n = d.shape[0]
    size = 1 << n
    out = np.zeros(size)
    row = np.zeros((n, size))
    if obj == KMEANS:
        sqrow = np.zeros((n, size))
        d2 = d * d
    for b in range(n):
        lo = 1 << b
        t, s = slice(0, lo), slice(lo, 2 * lo)
        row[:, s] = row[:, t] + d[b][:, None]
        if obj == KMEANS:
            sqrow[:, s] = sqrow[:, t] + d2[b][:, None]
            out[s] = out[t] + sqrow[b, t]
        elif obj == MINSUM:
            out[s] = out[t] + row[b, t]
    if obj == KMEANS:
        pc = np.bitwise_count(np.arange(size, dtype=np.uint64)).astype(np.float64)
        pc[0] = 1.0
        out = out / pc
    elif obj == KMEDOIDS:
        member = (np.arange(size)[None, :] >> np.arange(n)[:, None]) & 1
        masked = np.where(member == 1, row, np.inf)
        out = masked.min(axis=0)
        out[0] = 0.0
    return out


def partition_costs(sc, masks):
    cost = sc[masks[:, 0]]
    for j in range(1, masks.shape[1]):
        cost = cost + sc[masks[:, j]]
    return cost


def best_index(sc, masks, rtol):
    """Index of the first partition whose cost is within tolerance of the minimum."""
    cost = partition_costs(sc, masks)
    m = cost.min()
    thr = m + rtol * (1.0 + abs(m))
    idx = int(np.argmax(cost <= thr))
    return idx, float(cost[idx])


def exact_argmin(d, obj, masks, rtol):
    return best_index(subset_costs(d, obj), masks, rtol)


class ExactArgmin:
    """Same interface as the compiled class; nothing to cache here."""

    def __init__(self, n, obj, masks, rtol):
        self.obj = obj
        self.masks = np.ascontiguousarray(masks, dtype=np.int64)
        self.rtol = rtol

    def __call__(self, d):
        return exact_argmin(d, self.obj, self.masks, self.rtol)

    def batch(self, mats):
        return np.array([self(m)[0] for m in mats], dtype=np.int64)


def disagreement_counts(masks, ref):
    """Pairs on which each partition (as block masks) disagrees with ``ref``."""
    m = masks.astype(np.uint64)
    r = np.asarray(ref, dtype=np.uint64)
    sz = np.bitwise_count(m).astype(np.int64)
    together = (sz * (sz - 1) // 2).sum(axis=1)
    rs = np.bitwise_count(r).astype(np.int64)
    ref_together = int((rs * (rs - 1) // 2).sum())
    both = np.zeros(m.shape[0], dtype=np.int64)
    for j in range(r.shape[0]):
        c = np.bitwise_count(m & r[j]).astype(np.int64)
        both += (c * (c - 1) // 2).sum(axis=1)
    return together + ref_together - 2 * both


def linkage(d, k, method):
    """Agglomerate singletons until ``k`` clusters remain.

    Returns canonical labels, the (rankA, rankB) block pair of each merge and
    the linkage value at which it happened.
    """
    d = np.ascontiguousarray(d, dtype=np.float64)
    n = d.shape[0]
    steps = n - k
    L = d.copy()
    S = d.copy()
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    owner = np.arange(n)
    W = np.where(np.triu(np.ones((n, n), dtype=bool), 1), L, np.inf)
    ranks = np.zeros((steps, 2), dtype=np.int64)
    dists = np.zeros(steps)
    for step in range(steps):
        flat = int(np.argmin(W))
        i, j = divmod(flat, n)
        dists[step] = W[i, j]
        ranks[step, 0] = int(active[:i].sum())
        ranks[step, 1] = int(active[:j].sum())
        if method == SINGLE:
            new = np.minimum(L[i], L[j])
        elif method == COMPLETE:
            new = np.maximum(L[i], L[j])
        else:
            srow = S[i] + S[j]
            S[i, :] = srow
            S[:, i] = srow
            sizes[i] += sizes[j]
            new = srow / (sizes[i] * sizes)
        L[i, :] = new
        L[:, i] = new
        active[j] = False
        owner[owner == j] = i
        W[j, :] = np.inf
        W[:, j] = np.inf
        W[i, i + 1:] = np.where(active[i + 1:], new[i + 1:], np.inf)
        W[:i, i] = np.where(active[:i], new[:i], np.inf)
    rank_of = np.cumsum(active) - 1
    labels = rank_of[owner].astype(np.int64)
    return labels, ranks, dists
