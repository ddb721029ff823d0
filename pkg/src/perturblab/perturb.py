"""Multiplicative and additive perturbations: validity, sampling and adversarial search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .core import Clustering, DissimMatrix, PerturbLabError, hamming

BOUNDARY_TOL = 1e-12

MULT = "multiplicative"
ADD = "additive"
_KIND_ALIASES = {"mult": MULT, "multiplicative": MULT, "add": ADD, "additive": ADD}


def as_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[str(kind).lower()]
    except KeyError:
        raise PerturbLabError(f"unknown perturbation kind {kind!r}; expected mult or add") from None


@dataclass(frozen=True)
class PerturbSpec:
    kind: str
    alpha: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        kind = as_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind == MULT:
            if self.alpha is None or not self.alpha > 1 or self.epsilon is not None:
                raise PerturbLabError("a multiplicative spec needs alpha > 1 and no epsilon")
        else:
            if self.epsilon is None or not self.epsilon > 0 or self.alpha is not None:
                raise PerturbLabError("an additive spec needs epsilon > 0 and no alpha")

    @classmethod
    def mult(cls, alpha: float) -> "PerturbSpec":
        return cls(MULT, alpha=float(alpha))

    @classmethod
    def add(cls, epsilon: float) -> "PerturbSpec":
        return cls(ADD, epsilon=float(epsilon))

    @classmethod
    def of(cls, kind: str, size: float) -> "PerturbSpec":
        return cls.mult(size) if as_kind(kind) == MULT else cls.add(size)

    @property
    def size(self) -> float:
        return self.alpha if self.kind == MULT else self.epsilon

    def interval(self, base: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Admissible [lo, hi] for each base value (additive lo clamped at 0)."""
        base = np.asarray(base, dtype=np.float64)
        if self.kind == MULT:
            return base / self.alpha, base * self.alpha
        return np.maximum(base - self.epsilon, 0.0), base + self.epsilon

    def to_dict(self) -> dict:
        return {"kind": self.kind, "size": self.size}


@dataclass
class ValidityReport:
    valid: bool
    worst_pair: tuple[int, int] | None
    worst_value: float  # ratio (mult) or absolute offset (add) at the worst pair
    excess: float  # how far the worst pair sits past its bound; <= 0 when valid

    def __bool__(self):
        return self.valid

    def to_dict(self):
        return {"valid": self.valid, "worst_pair": self.worst_pair,
                "worst_value": self.worst_value, "excess": self.excess}


def is_valid_perturbation(d: DissimMatrix, d2: DissimMatrix, spec: PerturbSpec) -> ValidityReport:
    if d.n != d2.n:
        raise PerturbLabError(f"size mismatch: {d.n} vs {d2.n} points")
    n = d.n
    if n < 2:
        return ValidityReport(True, None, 1.0 if spec.kind == MULT else 0.0, float("-inf"))
    iu = np.triu_indices(n, 1)
    a = np.asarray(d)[iu]
    b = np.asarray(d2)[iu]
    lo, hi = spec.interval(a) if spec.kind == MULT else (a - spec.epsilon, a + spec.epsilon)
    excess = np.maximum(lo - b, b - hi)
    w = int(np.argmax(excess))
    if spec.kind == MULT:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(a > 0, b / a, np.where(b > 0, np.inf, 1.0))
        value = float(max(r[w], 1.0 / r[w]) if r[w] > 0 else np.inf)
    else:
        value = float(abs(b[w] - a[w]))
    worst = float(excess[w])
    return ValidityReport(worst <= BOUNDARY_TOL, (int(iu[0][w]), int(iu[1][w])), value, worst)


def _from_condensed(values: np.ndarray, n: int, iu) -> np.ndarray:
    m = np.zeros((n, n))
    m[iu] = values
    m.T[iu] = values
    return m


def sample_perturbation(d: DissimMatrix, spec: PerturbSpec, seed: int) -> DissimMatrix:
    """Independent per-pair perturbation drawn from numpy's PCG64 stream for ``seed``.

    Pairs are visited in row-major upper-triangle order.  Multiplicative
    factors are ``alpha ** U(-1, 1)`` (log-uniform); additive offsets are
    ``U(-eps, eps)`` with the result clamped at zero.
    """
    rng = np.random.default_rng(seed)
    return DissimMatrix(_sample_condensed(np.asarray(d), spec, rng, 1)[0], d.labels, _trusted=True)


def _sample_condensed(D: np.ndarray, spec: PerturbSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    n = D.shape[0]
    iu = np.triu_indices(n, 1)
    base = D[iu]
    u = rng.uniform(-1.0, 1.0, size=(count, base.size))
    lo, hi = spec.interval(base)
    if spec.kind == MULT:
        vals = base * spec.alpha ** u
    else:
        vals = base + spec.epsilon * u
    vals = np.clip(vals, lo, hi)
    out = np.zeros((count, n, n))
    out[:, iu[0], iu[1]] = vals
    out[:, iu[1], iu[0]] = vals
    return out


# ---------------------------------------------------------------------------
# adversarial search


@dataclass
class SearchResult:
    witness: DissimMatrix
    delta: Fraction
    evaluations: int
    serial: int  # position of the witness in the candidate stream
    base: Clustering
    perturbed: Clustering
    seed: int
    stages: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "delta": str(self.delta),
            "delta_float": float(self.delta),
            "evaluations": self.evaluations,
            "witness_serial": self.serial,
            "seed": self.seed,
            "base": list(self.base.labels),
            "perturbed": list(self.perturbed.labels),
            "stages": self.stages,
        }


def replica_groups(D: np.ndarray) -> list[list[int]]:
    """Group points that are exact copies of each other (distance 0, identical rows)."""
    n = D.shape[0]
    seen = [-1] * n
    groups: list[list[int]] = []
    for i in range(n):
        if seen[i] >= 0:
            continue
        seen[i] = len(groups)
        g = [i]
        for j in range(i + 1, n):
            if seen[j] < 0 and D[i, j] == 0 and np.array_equal(D[i], D[j]):
                seen[j] = seen[i]
                g.append(j)
        groups.append(g)
    return groups


def _structured(D: np.ndarray, spec: PerturbSpec):
    """Group-level extreme patterns: every group pair at lo, base or hi (or just lo/hi)."""
    groups = replica_groups(D)
    G = len(groups)
    if G < 2:
        return
    gpairs = list(itertools.combinations(range(G), 2))
    if len(gpairs) <= 6:
        levels = (0, 1, 2)
    elif len(gpairs) <= 12:
        levels = (0, 2)
    else:
        return
    reps = [g[0] for g in groups]
    base = np.array([D[reps[a], reps[b]] for a, b in gpairs])
    lo, hi = spec.interval(base)
    choices = np.stack([lo, base, hi])
    member = np.zeros(D.shape[0], dtype=np.int64)
    for gi, g in enumerate(groups):
        member[g] = gi
    for combo in itertools.product(levels, repeat=len(gpairs)):
        if all(c == 1 for c in combo):
            continue
        gval = np.zeros((G, G))
        for p, (a, b) in enumerate(gpairs):
            gval[a, b] = gval[b, a] = choices[combo[p], p]
        m = gval[np.ix_(member, member)]
        # co-replicas keep their zero distance, which is valid for both kinds
        yield m


def adversarial_search(fn, d: DissimMatrix, k: int, spec: PerturbSpec, budget: int, seed: int,
                       stop_at: float | Fraction | None = None, batch: int = 64) -> SearchResult:
    """Look for a valid perturbation that moves ``fn``'s output as far as possible.

    The candidate stream is fixed by ``seed`` and does not depend on
    ``budget``; the budget only truncates it, so the reported worst case is
    monotone in the budget.  Stream order: structured group-level patterns,
    then cycles of (random interior and vertex samples, coordinate
    hill-climb over per-pair interval endpoints from the best vertex).
    """
    from .functions import get_function

    if budget <= 0:
        raise PerturbLabError("budget must be a positive number of evaluations")
    fn = get_function(fn)
    fn.check_size(d.n)
    if not 1 <= k <= d.n:
        raise PerturbLabError(f"need 1 <= k <= n, got n={d.n}, k={k}")
    D = np.asarray(d)
    n = d.n
    M = comb(n, 2)
    probe = fn.probe(d, k)
    stop = None if stop_at is None else Fraction(stop_at)

    state = {"evals": 0, "best": -1, "serial": -1, "matrix": D, "done": False}
    stages = {"structured": 0, "random": 0, "hillclimb": 0}

    def run(mats: np.ndarray, stage: str) -> np.ndarray | None:
        left = budget - state["evals"]
        if left <= 0 or state["done"]:
            state["done"] = True
            return None
        mats = mats[:left]
        counts = probe.count_batch(mats)
        j = int(np.argmax(counts))
        if counts[j] > state["best"]:
            state["best"] = int(counts[j])
            state["serial"] = state["evals"] + j
            state["matrix"] = mats[j].copy()
        state["evals"] += len(mats)
        stages[stage] += len(mats)
        if stop is not None and M and Fraction(state["best"], M) >= stop:
            state["done"] = True
        if state["evals"] >= budget:
            state["done"] = True
        return counts

    if M == 0:
        run(D[None].copy(), "random")
    else:
        buf = []
        for m in _structured(D, spec):
            buf.append(m)
            if len(buf) == batch:
                run(np.stack(buf), "structured")
                buf = []
            if state["done"]:
                break
        if buf and not state["done"]:
            run(np.stack(buf), "structured")

        iu = np.triu_indices(n, 1)
        base = D[iu]
        lo, hi = spec.interval(base)
        ends = np.stack([lo, hi])
        rng = np.random.default_rng(seed)
        while not state["done"]:
            interior = _sample_condensed(D, spec, rng, batch // 2)
            picks = rng.integers(0, 2, size=(batch - batch // 2, M))
            verts = ends[picks, np.arange(M)]
            vmats = np.zeros((len(verts), n, n))
            vmats[:, iu[0], iu[1]] = verts
            vmats[:, iu[1], iu[0]] = verts
            counts = run(np.concatenate([interior, vmats]), "random")
            if counts is None:
                break
            vc = counts[batch // 2:]
            if len(vc) == 0:
                break
            j = int(np.argmax(vc))
            cur, cur_count = picks[j].copy(), int(vc[j])
            # coordinate hill-climb: flip one pair to its other endpoint
            for _ in range(M):
                flips = np.repeat(cur[None], M, axis=0)
                flips[np.arange(M), np.arange(M)] ^= 1
                fv = ends[flips, np.arange(M)]
                fm = np.zeros((M, n, n))
                fm[:, iu[0], iu[1]] = fv
                fm[:, iu[1], iu[0]] = fv
                fc = run(fm, "hillclimb")
                if fc is None or len(fc) < M:
                    break
                j = int(np.argmax(fc))
                if fc[j] <= cur_count:
                    break
                cur, cur_count = flips[j], int(fc[j])

    witness = DissimMatrix(state["matrix"], d.labels, _trusted=True)
    perturbed = probe.cluster(np.asarray(witness))
    delta = hamming(probe.base, perturbed) if n >= 2 else Fraction(0)
    if M and delta != Fraction(state["best"], M):
        raise AssertionError("probe count disagrees with the independent Hamming recount")
    return SearchResult(witness, delta, state["evals"], state["serial"], probe.base, perturbed, seed, stages)
