"""k-means (pairwise form), k-medoids and min-sum costs with an exhaustive optimizer."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np

from . import kernels
from .core import (
    TABLE_ROW_LIMIT,
    Clustering,
    DissimMatrix,
    PerturbLabError,
    check_cap,
    iter_rgs_chunks,
    masks_from_rows,
    partition_table,
    stirling2,
)

REL_TOL = 1e-9


class Objective(str, Enum):
    KMEANS = "kmeans"
    KMEDOIDS = "kmedoids"
    MINSUM = "minsum"

    @property
    def code(self) -> int:
        return {"kmeans": kernels.KMEANS, "kmedoids": kernels.KMEDOIDS, "minsum": kernels.MINSUM}[self.value]


def as_objective(obj) -> Objective:
    try:
        return Objective(obj.value if isinstance(obj, Enum) else str(obj).lower().replace("-", ""))
    except ValueError:
        raise PerturbLabError(f"unknown objective {obj!r}; expected kmeans, kmedoids or minsum") from None


def cost(obj, d: DissimMatrix, c: Clustering) -> float:
    """Cost of clustering ``c`` under ``d``, straight from the definitions."""
    obj = as_objective(obj)
    if c.n != d.n:
        raise PerturbLabError("clustering and matrix sizes differ")
    D = np.asarray(d)
    total = 0.0
    for block in c.blocks():
        sub = D[np.ix_(block, block)]
        if obj is Objective.KMEDOIDS:
            total += float(sub.sum(axis=0).min())
        else:
            iu = np.triu_indices(len(block), 1)
            pairs = sub[iu]
            if obj is Objective.MINSUM:
                total += float(pairs.sum())
            else:
                total += float((pairs * pairs).sum()) / len(block)
    return total


def within_tol(a: float, b: float, rtol: float = REL_TOL) -> bool:
    """True when ``a`` is tied with the minimum ``b`` under the optimizer's tolerance."""
    return a <= b + rtol * (1.0 + abs(b))


class ExactSolver:
    """Exhaustive optimizer for a fixed (objective, n, k), reusable across matrices."""

    def __init__(self, obj, n: int, k: int, cap: int | None = None):
        check_cap(n, cap)
        self.objective = as_objective(obj)
        self.n, self.k = n, k
        self.rows, self.masks = partition_table(n, k)
        self._run = kernels.exact_evaluator(n, self.objective.code, self.masks, REL_TOL)

    def __len__(self):
        return self.rows.shape[0]

    def solve_index(self, matrix) -> tuple[int, float]:
        return self._run(matrix)

    def batch(self, mats) -> np.ndarray:
        return self._run.batch(mats)

    def clustering(self, index: int) -> Clustering:
        return Clustering(tuple(self.rows[index].tolist()))

    def costs(self, matrix) -> np.ndarray:
        sc = kernels.subset_costs(matrix, self.objective.code)
        return kernels.partition_costs(sc, self.masks)

    def __call__(self, d) -> tuple[Clustering, float]:
        idx, c = self.solve_index(np.asarray(d))
        return self.clustering(idx), c


def _streamed(obj: Objective, D: np.ndarray, k: int, threads: int) -> tuple[Clustering, float]:
    n = D.shape[0]
    sc = kernels.subset_costs(D, obj.code)

    def scan(rows):
        c = kernels.partition_costs(sc, masks_from_rows(rows, k))
        m = float(c.min())
        keep = np.nonzero(c <= m + REL_TOL * (1.0 + abs(m)))[0]
        return m, [(float(c[i]), tuple(rows[i].tolist())) for i in keep]

    chunks = iter_rgs_chunks(n, k, TABLE_ROW_LIMIT)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan, chunks))
    else:
        results = [scan(rows) for rows in chunks]
    best = min(m for m, _ in results)
    thr = best + REL_TOL * (1.0 + abs(best))
    # chunks arrive in lexicographic order, so the first hit is the canonical tie-break
    for _, cands in results:
        for c, labels in cands:
            if c <= thr:
                return Clustering(labels), c
    raise AssertionError("unreachable")


def exact_optimize(obj, d: DissimMatrix, k: int, cap: int | None = None, threads: int = 1) -> tuple[Clustering, float]:
    """Minimum-cost k-clustering by full enumeration.

    Ties within a relative tolerance of 1e-9 go to the lexicographically
    smallest canonical label string.
    """
    obj = as_objective(obj)
    n = d.n
    check_cap(n, cap)
    if not 1 <= k <= n:
        raise PerturbLabError(f"need 1 <= k <= n, got n={n}, k={k}")
    if stirling2(n, k) <= TABLE_ROW_LIMIT:
        return ExactSolver(obj, n, k, cap=cap)(d)
    return _streamed(obj, np.asarray(d), k, threads)
