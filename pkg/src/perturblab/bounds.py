"""Closed-form robustness bounds and the certify / refute driver.

Three variants of each bound are kept:

* ``two_sided`` (default): the perturbed optimum's cost is carried back to
  the original matrix before it is compared with the uniqueness slack.  This
  is what a sound certificate needs.
* ``proof_consistent``: the one-sided inequality chain (costs under d'
  bounded by inflated costs under d), with the algebra redone.
* ``as_printed``: the closed forms exactly as originally stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, sqrt

import numpy as np

from .clusterability import separability_profile, uo_profile
from .core import DissimMatrix, PerturbLabError
from .functions import get_function
from .perturb import ADD, MULT, PerturbSpec, adversarial_search, as_kind

INF = math.inf
VARIANTS = ("two_sided", "proof_consistent", "as_printed")
LINKAGES = ("single", "average", "complete")
GRID_POINTS = 64


@dataclass(frozen=True)
class BoundFormula:
    function: str
    kind: str
    variant: str = "two_sided"
    c: float | None = None
    c0: float | None = None
    n: int | None = None
    rho: float | None = None
    margin: float | None = None

    def __post_init__(self):
        fn = self.function.replace("linkage-", "")
        object.__setattr__(self, "function", fn)
        object.__setattr__(self, "kind", as_kind(self.kind))
        if fn not in ("kmeans", "kmedoids", "minsum") + LINKAGES:
            raise PerturbLabError(f"no bound for function {self.function!r}")
        if self.variant not in VARIANTS:
            raise PerturbLabError(f"variant must be one of {VARIANTS}")


def _need(value, name, f: BoundFormula):
    if value is None:
        raise PerturbLabError(f"{f.function}/{f.kind} bound needs {name}")
    return value


def _solve_increasing(g, target: float) -> float:
    """Largest x >= 0 with g(x) <= target for increasing g with g(0) = 0."""
    if target <= 0:
        return 0.0
    if target == INF:
        return INF
    lo, hi = 0.0, 1.0
    while g(hi) <= target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return lo


def robust_bound(f: BoundFormula) -> float:
    """Supremum of safe alpha (multiplicative) or epsilon (additive)."""
    if f.function in LINKAGES:
        if f.kind == MULT:
            rho = _need(f.rho, "rho", f)
            return sqrt(rho) if rho < INF else INF
        margin = _need(f.margin, "margin", f)
        return margin / 2.0

    c = _need(f.c, "c", f)
    if c < 1:
        raise PerturbLabError("c must be at least 1")
    if f.kind == MULT:
        if f.function == "kmeans":
            return c ** 0.25 if f.variant == "two_sided" else sqrt(c)
        return sqrt(c) if f.variant == "two_sided" else c

    c0 = _need(f.c0, "c0", f)
    n = _need(f.n, "n", f)
    if c0 < 0 or n < 2:
        raise PerturbLabError("need c0 >= 0 and n >= 2")
    M = comb(n, 2)
    if f.function == "kmeans":
        if f.variant == "two_sided":
            first = (sqrt(c) - 1.0) / 2.0
            second = _solve_increasing(lambda e: (2.0 + 2.0 * e) * M * (2.0 * e + e * e), c0)
        elif f.variant == "proof_consistent":
            first = (c - 1.0) / 2.0
            second = INF if c0 == INF else (-M + sqrt(M * M + M * c0)) / M
        else:
            first = (c - 1.0) / 2.0
            second = INF if c0 == INF else (-M + sqrt(M * M + 4 * M * c0)) / (2 * M)
        return min(first, second)
    if f.variant == "as_printed" and f.function == "kmedoids":
        return sqrt(2.0 * c0 / (n * (n - 1)))
    if c != 1:
        raise PerturbLabError(
            f"the additive {f.function} argument only works at c = 1 (the slack must sit entirely in c0)"
        )
    return c0 / (2 * M) if f.variant == "two_sided" else c0 / M


@dataclass
class RobustnessVerdict:
    status: str  # certified | refuted | unknown
    bound: float | None = None
    witness: DissimMatrix | None = None
    witness_delta: Fraction | None = None
    provenance: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "status": self.status,
            "bound": None if self.bound is None else (self.bound if math.isfinite(self.bound) else "inf"),
            "provenance": self.provenance,
            "details": self.details,
        }
        if self.witness_delta is not None:
            out["witness_delta"] = str(self.witness_delta)
            out["witness_delta_float"] = float(self.witness_delta)
        return out


def best_objective_bound(fn_name: str, profile, kind: str, n: int, variant: str = "two_sided"):
    """Maximize the bound over a grid of admissible (c, c0) pairs.

    Returns (bound, c, c0).  A landscape with no slack gives bound 0.
    """
    kind = as_kind(kind)
    if not profile.is_uo:
        return 0.0, None, None
    if profile.min_far_cost == INF:
        return INF, None, None
    if profile.opt_cost == 0:
        if kind == MULT:
            return INF, None, None
        grid = [1.0]
    elif kind == ADD and fn_name in ("kmedoids", "minsum") and variant != "as_printed":
        grid = [1.0]
    else:
        grid = list(np.linspace(1.0, profile.c_max, GRID_POINTS))
    best = (-1.0, None, None)
    for c in grid:
        c = float(c)
        c0 = profile.c0_max(c)
        b = robust_bound(BoundFormula(fn_name, kind, variant, c=c, c0=c0, n=n))
        if b > best[0]:
            best = (b, c, c0)
    return best


def certify(fn, d: DissimMatrix, k: int, spec: PerturbSpec, delta, budget: int = 10_000, seed: int = 0,
            variant: str = "two_sided") -> RobustnessVerdict:
    """Certify (bound strictly above the perturbation size), refute (search witness) or give up."""
    fn = get_function(fn)
    delta = Fraction(delta)
    details: dict = {"variant": variant}
    if fn.is_objective:
        prof = uo_profile(fn.objective, d, k, delta)
        bound, c, c0 = best_objective_bound(fn.name, prof, spec.kind, d.n, variant)
        details.update(uo=prof.to_dict(), c=c, c0=c0 if c0 is None or math.isfinite(c0) else "inf")
        prov = f"uniqueness-of-optimum bound ({variant})"
    else:
        out = fn(d, k)
        prof = separability_profile(d, out)
        details.update(separability=prof.to_dict())
        if variant == "two_sided":
            bf = BoundFormula(fn.name, spec.kind, variant, rho=prof.rho_global, margin=prof.margin_global)
        else:
            bf = BoundFormula(fn.name, spec.kind, variant, rho=prof.rho, margin=prof.margin)
        bound = robust_bound(bf) if delta > 0 else 0.0
        prov = f"separability bound ({variant})"
    if bound > spec.size:
        return RobustnessVerdict("certified", bound, provenance=prov, details=details)
    details["bound_failed"] = bound
    if budget <= 0:
        return RobustnessVerdict("unknown", bound, provenance="no search budget", details=details)
    res = adversarial_search(fn, d, k, spec, budget, seed, stop_at=delta)
    details["search"] = res.to_dict()
    if res.delta >= delta:
        return RobustnessVerdict("refuted", bound, res.witness, res.delta, "adversarial search", details)
    return RobustnessVerdict("unknown", bound, None, res.delta, "search budget exhausted", details)
