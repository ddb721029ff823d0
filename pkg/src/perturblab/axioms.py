"""Executable checks of the three-body rule, replication invariance and 2-richness,
plus the impossibility scripts built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import Clustering, DissimMatrix, PerturbLabError, hamming, replicate, replicate_clustering
from .functions import get_function
from .generators import gen_three_body, three_body_delta
from .perturb import MULT, PerturbSpec, is_valid_perturbation

HOLDS, VIOLATED, VACUOUS = "holds", "violated", "vacuous"
CLAIMED_DELTA = Fraction(2, 3)


@dataclass
class AxiomReport:
    axiom: str
    instance: str
    status: str
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status != VIOLATED

    def to_dict(self):
        return {"axiom": self.axiom, "instance": self.instance, "status": self.status,
                "holds": self.holds, "witness": self.witness, "details": self.details}


def _tri_desc(d: DissimMatrix) -> str:
    D = np.asarray(d)
    return f"ab={D[0, 1]!r} bc={D[1, 2]!r} ac={D[0, 2]!r}"


def check_three_body(fn, d: DissimMatrix) -> AxiomReport:
    fn = get_function(fn)
    if d.n != 3:
        raise PerturbLabError("the three-body rule needs exactly 3 points")
    D = np.asarray(d)
    pairs = {(0, 1): D[0, 1], (1, 2): D[1, 2], (0, 2): D[0, 2]}
    (x, y), v = min(pairs.items(), key=lambda kv: kv[1])
    others = [w for p, w in pairs.items() if p != (x, y)]
    if not all(v < w for w in others):
        return AxiomReport("three-body", _tri_desc(d), VACUOUS, details={"reason": "no unique closest pair"})
    lone = ({0, 1, 2} - {x, y}).pop()
    want = Clustering(tuple(0 if i == lone else 1 for i in range(3)))
    got = fn(d, 2)
    status = HOLDS if got == want else VIOLATED
    wit = None if status == HOLDS else {"matrix": D.tolist(), "output": list(got.labels), "expected": list(want.labels)}
    return AxiomReport("three-body", _tri_desc(d), status, wit,
                       {"function": fn.name, "output": str(got), "expected": str(want)})


def _unique_optimum(fn, d: DissimMatrix, k: int) -> bool:
    from .objectives import REL_TOL, ExactSolver

    solver = ExactSolver(fn.objective, d.n, k)
    costs = solver.costs(np.asarray(d))
    m = costs.min()
    return int((costs <= m + REL_TOL * (1.0 + abs(m))).sum()) == 1


def check_replication_invariance(fn, d: DissimMatrix, k: int, r: int) -> AxiomReport:
    fn = get_function(fn)
    fn.check_size(r * d.n)
    desc = f"n={d.n} k={k} r={r}"
    if fn.is_objective and not _unique_optimum(fn, d, k):
        return AxiomReport("replication-invariance", desc, VACUOUS, details={"reason": "optimum on d is not unique"})
    out = fn(d, k)
    dr, origin = replicate(d, r)
    got = fn(dr, k)
    want = replicate_clustering(out, r)
    status = HOLDS if got == want else VIOLATED
    wit = None if status == HOLDS else {"matrix": np.asarray(d).tolist(), "r": r,
                                        "output": list(got.labels), "expected": list(want.labels)}
    return AxiomReport("replication-invariance", desc, status, wit,
                       {"function": fn.name, "output": str(got), "expected": str(want)})


def _padded(n: int, k: int, ab: float, bc: float, ac: float, spread: bool = False) -> DissimMatrix:
    """Three-body core on points 0,1,2, then k-2 far points at distance 100, then
    zero-distance copies of point 1 (or of 0,1,2 in turn when ``spread``)."""
    D = np.zeros((n, n))
    D[0, 1] = D[1, 0] = ab
    D[1, 2] = D[2, 1] = bc
    D[0, 2] = D[2, 0] = ac
    far = list(range(3, 3 + k - 2))
    copies = list(range(3 + k - 2, n))
    src = np.arange(n)
    for i, c in enumerate(copies):
        src[c] = i % 3 if spread else 1
    core = [i for i in range(n) if i not in far]
    sc = src[core]
    D[np.ix_(core, core)] = D[np.ix_(sc, sc)]
    for f in far:
        D[f, :] = 100.0
        D[:, f] = 100.0
    np.fill_diagonal(D, 0.0)
    return DissimMatrix(D)


def richness_witness(fn, n: int, k: int, seed: int = 0, tries: int = 200):
    """Two matrices on which ``fn`` gives different k-clusterings, or None.

    Both matrices share one zero pattern, so a multiplicative chain can join them.
    """
    fn = get_function(fn)
    if n < 3 or not 2 <= k < n:
        raise PerturbLabError("need n >= 3 and 2 <= k < n")
    for spread in (False, True):
        d1 = _padded(n, k, 2.0, 1.0, 3.0, spread)
        d2 = _padded(n, k, 1.0, 2.0, 3.0, spread)
        if fn(d1, k) != fn(d2, k):
            return d1, d2
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        spread = bool(rng.integers(0, 2))
        d1 = _padded(n, k, *rng.uniform(0.5, 5.0, size=3), spread)
        d2 = _padded(n, k, *rng.uniform(0.5, 5.0, size=3), spread)
        if fn(d1, k) != fn(d2, k):
            return d1, d2
    return None


def perturbation_chain(d1: DissimMatrix, d2: DissimMatrix, spec: PerturbSpec) -> list[DissimMatrix]:
    """d1 = e_0, ..., e_T = d2 with each step a valid perturbation of the one before."""
    if d1.n != d2.n:
        raise PerturbLabError("chain endpoints differ in size")
    A, B = np.asarray(d1), np.asarray(d2)
    if np.array_equal(A, B):
        return [d1]
    if spec.kind == MULT:
        if not np.array_equal(A == 0, B == 0):
            raise PerturbLabError("multiplicative chains need the same zero pattern at both ends")
        nz = A > 0
        logs = np.zeros_like(A)
        logs[nz] = np.log(B[nz] / A[nz])
        x = float(np.abs(logs).max() / math.log(spec.alpha))
    else:
        x = float(np.abs(B - A).max() / spec.epsilon)
    T = max(1, math.ceil(x - 1e-9))
    while True:
        steps = [d1]
        ok = True
        for t in range(1, T + 1):
            if t == T:
                e = d2
            elif spec.kind == MULT:
                M = np.where(nz, A * np.exp(logs * (t / T)), 0.0)
                e = DissimMatrix(M, _trusted=True)
            else:
                e = DissimMatrix(A + (B - A) * (t / T), _trusted=True)
            if not is_valid_perturbation(steps[-1], e, spec):
                ok = False
                break
            steps.append(e)
        if ok:
            return steps
        T += 1


@dataclass
class ChainDemo:
    function: str
    spec: PerturbSpec
    chain: list
    outputs: list
    change_step: int | None
    all_valid: bool

    def to_dict(self):
        return {"function": self.function, "spec": self.spec.to_dict(), "steps": len(self.chain) - 1,
                "change_step": self.change_step, "all_steps_valid": self.all_valid,
                "outputs": [list(c.labels) for c in self.outputs]}


def zero_delta_demo(fn, n: int, k: int, spec: PerturbSpec) -> ChainDemo | None:
    """Walk a valid chain between two richness matrices and find where the output moves.

    Any step where it moves is a valid perturbation with positive Hamming
    change, so no function with two distinct outputs is (spec, 0)-robust.
    """
    fn = get_function(fn)
    pair = richness_witness(fn, n, k)
    if pair is None:
        return None
    chain = perturbation_chain(*pair, spec)
    outs = [fn(e, k) for e in chain]
    change = next((t for t in range(1, len(outs)) if outs[t] != outs[t - 1]), None)
    valid = all(bool(is_valid_perturbation(chain[t - 1], chain[t], spec)) for t in range(1, len(chain)))
    return ChainDemo(fn.name, spec, chain, outs, change, valid)


@dataclass
class ImpossibilityReport:
    function: str
    kind: str
    param: float
    r: int
    delta: Fraction
    measured: Fraction
    law: Fraction
    perturbation_valid: bool
    out_before: Clustering
    out_after: Clustering
    expected_ok: bool
    reports: dict

    @property
    def violated(self) -> list[str]:
        return [name for name, rep in self.reports.items() if rep.status == VIOLATED]

    @property
    def discrepancy(self) -> bool:
        """The measured change differs from the constant 2/3 claimed for every r."""
        return self.measured != CLAIMED_DELTA

    def to_dict(self):
        return {
            "function": self.function,
            "kind": self.kind,
            "param": self.param,
            "r": self.r,
            "delta": str(self.delta),
            "measured_delta": str(self.measured),
            "measured_delta_float": float(self.measured),
            "law_4r_over_3(3r-1)": str(self.law),
            "claimed_delta": str(CLAIMED_DELTA),
            "discrepancy_with_claim": self.discrepancy,
            "perturbation_valid": self.perturbation_valid,
            "out_before": list(self.out_before.labels),
            "out_after": list(self.out_after.labels),
            "outputs_as_expected": self.expected_ok,
            "violated": self.violated,
            "axioms": {k: v.to_dict() for k, v in self.reports.items()},
        }


def impossibility_demo(kind, param: float, r: int, fn, delta=None) -> ImpossibilityReport:
    """Run the three-body/replication script and report which requirement gives way.

    Robustness is tested at ``delta`` (default: the change this construction
    can produce with r copies, 4r/(3(3r-1)), which is 2/3 at r = 1).
    """
    fn = get_function(fn)
    inst = gen_three_body(kind, param, r)
    base = gen_three_body(kind, param, 1)
    delta = three_body_delta(r) if delta is None else Fraction(delta)
    valid = bool(inst.check())
    before = fn(inst.d, 2)
    after = fn(inst.d2, 2)
    measured = hamming(before, after)
    tb = [check_three_body(fn, base.d), check_three_body(fn, base.d2)]
    tb_status = VIOLATED if any(t.status == VIOLATED for t in tb) else HOLDS
    reports = {
        "three-body": AxiomReport("three-body", "base and perturbed triangles", tb_status,
                                  next((t.witness for t in tb if t.witness), None),
                                  {"before": tb[0].to_dict(), "after": tb[1].to_dict()}),
    }
    if r > 1:
        rb = [check_replication_invariance(fn, base.d, 2, r), check_replication_invariance(fn, base.d2, 2, r)]
        st = VIOLATED if any(x.status == VIOLATED for x in rb) else (
            VACUOUS if all(x.status == VACUOUS for x in rb) else HOLDS)
        reports["replication-invariance"] = AxiomReport(
            "replication-invariance", f"r={r}", st, next((x.witness for x in rb if x.witness), None),
            {"before": rb[0].to_dict(), "after": rb[1].to_dict()})
    else:
        reports["replication-invariance"] = AxiomReport("replication-invariance", "r=1", HOLDS,
                                                        details={"reason": "identity replication"})
    rob_status = VIOLATED if valid and measured >= delta else HOLDS
    reports["robustness"] = AxiomReport(
        "robustness", f"{inst.spec.kind} {inst.spec.size} at delta={delta}", rob_status,
        {"d": np.asarray(inst.d).tolist(), "d2": np.asarray(inst.d2).tolist(), "delta": str(measured)}
        if rob_status == VIOLATED else None,
        {"measured_delta": str(measured)})
    return ImpossibilityReport(fn.name, inst.spec.kind, float(param), r, delta, measured, three_body_delta(r),
                               valid, before, after,
                               before == inst.expected_before and after == inst.expected_after, reports)
