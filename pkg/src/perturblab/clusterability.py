"""Uniqueness-of-optimum landscapes and strict separability profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import kernels
from .core import Clustering, DissimMatrix, PerturbLabError, check_cap, enumerate_k_partitions
from .linkage import linkage_run
from .objectives import ExactSolver, Objective, as_objective

INF = math.inf


@dataclass
class UOProfile:
    objective: Objective
    k: int
    delta: Fraction
    opt: Clustering
    opt_cost: float
    min_far_cost: float
    far_count: int
    closest_far: Clustering | None

    @property
    def c_max(self) -> float:
        """Largest multiplicative slack at c0 = 0 (exclusive: cost must stay below it)."""
        if self.opt_cost > 0:
            return self.min_far_cost / self.opt_cost
        return INF

    def c0_max(self, c: float) -> float:
        if c < 1:
            raise PerturbLabError("c must be at least 1")
        if self.opt_cost > 0 and c > self.c_max:
            return 0.0
        if self.min_far_cost == INF:
            return INF
        return max(self.min_far_cost - c * self.opt_cost, 0.0)

    @property
    def is_uo(self) -> bool:
        """Some slack exists at all: every far clustering costs strictly more than the optimum."""
        return self.min_far_cost > self.opt_cost

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "k": self.k,
            "delta": str(self.delta),
            "opt": list(self.opt.labels),
            "opt_cost": self.opt_cost,
            "min_far_cost": _num(self.min_far_cost),
            "c_max": _num(self.c_max),
            "far_count": self.far_count,
            "closest_far": None if self.closest_far is None else list(self.closest_far.labels),
        }


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def uo_profile(obj, d: DissimMatrix, k: int, delta) -> UOProfile:
    obj = as_objective(obj)
    check_cap(d.n)
    delta = Fraction(delta)
    if not 0 < delta <= 1:
        raise PerturbLabError("delta must lie in (0, 1]")
    solver = ExactSolver(obj, d.n, k)
    D = np.asarray(d)
    idx, opt_cost = solver.solve_index(D)
    opt = solver.clustering(idx)
    costs = solver.costs(D)
    counts = kernels.disagreement_counts(solver.masks, np.asarray(opt.masks(), dtype=np.int64))
    M = comb(d.n, 2)
    # far means Hamming >= delta; compare counts exactly against delta * M
    far = counts * delta.denominator >= delta.numerator * M if M else np.zeros(len(costs), bool)
    if far.any():
        fc = np.where(far, costs, np.inf)
        j = int(np.argmin(fc))
        return UOProfile(obj, k, delta, opt, float(opt_cost), float(fc[j]), int(far.sum()), solver.clustering(j))
    return UOProfile(obj, k, delta, opt, float(opt_cost), INF, 0, None)


@dataclass
class SeparabilityProfile:
    clustering: Clustering
    rho: float
    margin: float
    rho_global: float
    margin_global: float
    binding_point: int | None

    @property
    def strict(self) -> bool:
        return self.rho > 1

    @property
    def tie(self) -> bool:
        """Separable only in the weak sense (rho exactly 1)."""
        return self.rho == 1

    def to_dict(self):
        return {
            "clustering": list(self.clustering.labels),
            "rho": _num(self.rho),
            "margin": _num(self.margin),
            "rho_global": _num(self.rho_global),
            "margin_global": _num(self.margin_global),
            "binding_point": self.binding_point,
            "strict": self.strict,
            "tie": self.tie,
        }


def _ratio(out_min: float, in_max: float) -> float:
    if in_max == 0:
        return INF
    return out_min / in_max


def separability_profile(d: DissimMatrix, C: Clustering) -> SeparabilityProfile:
    """Per-point and global separation of ``C`` under ``d``.

    rho is the min over points x of (closest outside point) / (farthest
    co-member).  The global pair (rho_global, margin_global) compares the
    largest in-block entry with the smallest cross-block entry instead.
    """
    if C.n != d.n:
        raise PerturbLabError("clustering and matrix sizes differ")
    D = np.asarray(d)
    lab = C.array()
    same = lab[:, None] == lab[None, :]
    np.fill_diagonal(same, False)
    cross = lab[:, None] != lab[None, :]
    in_max = np.where(same, D, -np.inf).max(axis=1)
    out_min = np.where(cross, D, np.inf).min(axis=1)
    rho, margin, who = INF, INF, None
    for x in range(d.n):
        if in_max[x] == -np.inf:
            continue  # singleton block: nothing to compare against
        r = _ratio(out_min[x], in_max[x])
        if r < rho:
            rho, who = r, x
        margin = min(margin, out_min[x] - in_max[x])
    gin = in_max.max() if d.n else -np.inf
    gout = out_min.min() if d.n else np.inf
    if gin == -np.inf:
        rho_g, margin_g = INF, INF
    else:
        rho_g = _ratio(gout, gin)
        margin_g = gout - gin
    return SeparabilityProfile(C, float(rho), float(margin), float(rho_g), float(margin_g), who)


def find_separable_clustering(d: DissimMatrix, k: int, exhaustive: bool = True) -> Clustering | None:
    """A k-clustering with rho > 1, or None.

    Single linkage proposes the candidate.  Per-point separability does not
    force single linkage to find it, so when the candidate fails and the
    instance is small enough we fall back to enumeration and return the
    first strictly separable clustering in canonical order.
    """
    if not 1 <= k <= d.n:
        raise PerturbLabError(f"need 1 <= k <= n, got n={d.n}, k={k}")
    cand, _ = linkage_run("single", d, k)
    if separability_profile(d, cand).rho > 1:
        return cand
    if not exhaustive:
        return None
    try:
        found = separable_clusterings(d, k)
    except PerturbLabError:
        return None
    return found[0] if found else None


def separable_clusterings(d: DissimMatrix, k: int) -> list[Clustering]:
    """Every k-clustering with rho > 1 (exhaustive, so capped like the exact solver)."""
    return [C for C in enumerate_k_partitions(d.n, k) if separability_profile(d, C).rho > 1]


def is_laminar(clusterings) -> bool:
    """True when any two blocks drawn from the given clusterings are nested or disjoint."""
    blocks = {frozenset(b) for C in clusterings for b in C.blocks()}
    bl = list(blocks)
    for i in range(len(bl)):
        for j in range(i + 1, len(bl)):
            a, b = bl[i], bl[j]
            if a & b and not (a <= b or b <= a):
                return False
    return True
