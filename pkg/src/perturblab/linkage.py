"""Single, average and complete linkage stopped at k clusters."""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import kernels
from .core import Clustering, DissimMatrix, MergeTrace, PerturbLabError

MAX_LINKAGE_N = 2000


class LinkageMethod(str, Enum):
    SINGLE = "single"
    AVERAGE = "average"
    COMPLETE = "complete"

    @property
    def code(self) -> int:
        return {"single": kernels.SINGLE, "average": kernels.AVERAGE, "complete": kernels.COMPLETE}[self.value]


def as_method(method) -> LinkageMethod:
    try:
        return LinkageMethod(method.value if isinstance(method, Enum) else str(method).lower())
    except ValueError:
        raise PerturbLabError(f"unknown linkage {method!r}; expected single, average or complete") from None


def linkage_labels(method, matrix: np.ndarray, k: int) -> np.ndarray:
    """Canonical labels only; the fast path used by search loops."""
    return kernels.linkage(matrix, k, as_method(method).code)[0]


def linkage_run(method, d: DissimMatrix, k: int) -> tuple[Clustering, MergeTrace]:
    """Merge the closest pair of clusters until ``k`` remain.

    Ties go to the smallest (blockA, blockB) pair of canonical block indices.
    """
    method = as_method(method)
    n = d.n
    if not 1 <= k <= n:
        raise PerturbLabError(f"need 1 <= k <= n, got n={n}, k={k}")
    if n > MAX_LINKAGE_N:
        raise PerturbLabError(f"linkage is capped at {MAX_LINKAGE_N} points")
    labels, ranks, dists = kernels.linkage(np.asarray(d), k, method.code)
    merges = tuple((int(a), int(b), float(v)) for (a, b), v in zip(ranks.tolist(), dists.tolist()))
    return Clustering(tuple(labels.tolist())), MergeTrace(merges, n)
