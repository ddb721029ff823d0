"""The six clustering functions behind one handle type.

A handle is called as ``fn(d, k) -> Clustering``.  ``fn.probe(d, k)`` builds
a fast closure that maps a raw perturbed matrix to its pair-disagreement
count against ``fn(d, k)``; the adversarial search spends its budget there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Clustering, DissimMatrix, PerturbLabError, check_cap, label_disagreements
from .linkage import MAX_LINKAGE_N, LinkageMethod, linkage_labels, linkage_run
from .objectives import ExactSolver, Objective


@dataclass
class Probe:
    base: Clustering
    count: callable
    count_batch: callable
    cluster: callable


class ClusteringFunction:
    name: str
    is_objective: bool

    def __call__(self, d: DissimMatrix, k: int) -> Clustering:
        raise NotImplementedError

    def check_size(self, n: int) -> None:
        raise NotImplementedError

    def probe(self, d: DissimMatrix, k: int) -> Probe:
        raise NotImplementedError

    def __repr__(self):
        return f"<clustering function {self.name}>"


class ObjectiveFunction(ClusteringFunction):
    is_objective = True

    def __init__(self, objective: Objective):
        self.objective = objective
        self.name = objective.value

    def check_size(self, n):
        check_cap(n)

    def solver(self, n: int, k: int) -> ExactSolver:
        return ExactSolver(self.objective, n, k)

    def __call__(self, d, k):
        from .objectives import exact_optimize
        return exact_optimize(self.objective, d, k)[0]

    def probe(self, d, k):
        solver = self.solver(d.n, k)
        base_idx, _ = solver.solve_index(np.asarray(d))
        base = solver.clustering(base_idx)
        table = kernels.disagreement_counts(solver.masks, np.asarray(base.masks(), dtype=np.int64))

        def count(matrix):
            return int(table[solver.solve_index(matrix)[0]])

        def count_batch(mats):
            return table[solver.batch(mats)]

        def cluster(matrix):
            return solver.clustering(solver.solve_index(matrix)[0])

        return Probe(base, count, count_batch, cluster)


class LinkageFunction(ClusteringFunction):
    is_objective = False

    def __init__(self, method: LinkageMethod):
        self.method = method
        self.name = method.value

    def check_size(self, n):
        if n > MAX_LINKAGE_N:
            raise PerturbLabError(f"linkage is capped at {MAX_LINKAGE_N} points")

    def __call__(self, d, k):
        return linkage_run(self.method, d, k)[0]

    def probe(self, d, k):
        base_labels = linkage_labels(self.method, np.asarray(d), k)
        base = Clustering(tuple(base_labels.tolist()))
        method = self.method

        def count(matrix):
            return label_disagreements(base_labels, linkage_labels(method, matrix, k))

        def count_batch(mats):
            return np.array([count(m) for m in mats], dtype=np.int64)

        def cluster(matrix):
            return Clustering(tuple(linkage_labels(method, matrix, k).tolist()))

        return Probe(base, count, count_batch, cluster)


FUNCTIONS: dict[str, ClusteringFunction] = {
    "kmeans": ObjectiveFunction(Objective.KMEANS),
    "kmedoids": ObjectiveFunction(Objective.KMEDOIDS),
    "minsum": ObjectiveFunction(Objective.MINSUM),
    "single": LinkageFunction(LinkageMethod.SINGLE),
    "average": LinkageFunction(LinkageMethod.AVERAGE),
    "complete": LinkageFunction(LinkageMethod.COMPLETE),
}

_ALIASES = {
    "k-means": "kmeans", "k-medoids": "kmedoids", "min-sum": "minsum",
    "linkage-single": "single", "linkage-average": "average", "linkage-complete": "complete",
}


def get_function(name) -> ClusteringFunction:
    if isinstance(name, ClusteringFunction):
        return name
    key = _ALIASES.get(str(name).lower(), str(name).lower())
    try:
        return FUNCTIONS[key]
    except KeyError:
        raise PerturbLabError(f"unknown clustering function {name!r}; choose from {', '.join(FUNCTIONS)}") from None
