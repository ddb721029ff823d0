"""Instance families: three-body pairs, planted separable data, cloud + singletons, Euclidean three points."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .clusterability import separability_profile
from .core import Clustering, DissimMatrix, PerturbLabError, hamming, replicate, replicate_clustering
from .perturb import ADD, MULT, PerturbSpec, as_kind, is_valid_perturbation


@dataclass
class PairedInstance:
    d: DissimMatrix
    d2: DissimMatrix
    spec: PerturbSpec
    expected_before: Clustering
    expected_after: Clustering
    notes: dict = field(default_factory=dict)
    coords: tuple[np.ndarray, np.ndarray] | None = None

    def check(self):
        return is_valid_perturbation(self.d, self.d2, self.spec)

    def manifest(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "expected_before": list(self.expected_before.labels),
            "expected_after": list(self.expected_after.labels),
            "notes": self.notes,
        }


def _tri(ab: float, bc: float, ac: float) -> DissimMatrix:
    # point order a, b, c
    return DissimMatrix([[0.0, ab, ac], [ab, 0.0, bc], [ac, bc, 0.0]], ("a", "b", "c"))


def gen_three_body(kind, param: float, r: int = 1) -> PairedInstance:
    """The paired three-body instance, replicated r times (copy j comes from point j % 3)."""
    kind = as_kind(kind)
    if r < 1:
        raise PerturbLabError("r must be >= 1")
    if kind == MULT:
        a = float(param)
        spec = PerturbSpec.mult(a)
        base = _tri(ab=a, bc=1.0, ac=a + 1.0)
        pert = _tri(ab=1.0, bc=a, ac=a + 1.0)
    else:
        e = float(param)
        spec = PerturbSpec.add(e)
        base = _tri(ab=1.0 + e / 2, bc=1.0, ac=1.0 + e)
        pert = _tri(ab=1.0, bc=1.0 + e / 2, ac=1.0 + e)
    before = Clustering((0, 1, 1))  # {A}, {B u C}
    after = Clustering((0, 0, 1))  # {A u B}, {C}
    d, origin = replicate(base, r)
    d2, _ = replicate(pert, r)
    return PairedInstance(
        d, d2, spec, replicate_clustering(before, r), replicate_clustering(after, r),
        {"construction": "three-body", "kind": kind, "param": float(param), "r": r, "origin": list(origin)},
    )


def three_body_delta(r: int) -> Fraction:
    """Hamming distance between {B u C, A} and {A u B, C} with blocks of r copies."""
    return Fraction(4 * r, 3 * (3 * r - 1))


def gen_separable(n: int, k: int, rho_or_margin: float, kind="mult", seed: int = 0) -> tuple[DissimMatrix, Clustering]:
    """Balanced planted blocks (randomly assigned) with in-block entries in [0.5, 1].

    Cross-block entries are drawn from [rho, 1.5 rho] (multiplicative) or
    [1 + margin, 1.5 + margin] (additive), so the global separation, and
    hence the per-point one, is at least the requested value.
    """
    kind = as_kind(kind)
    if not 1 <= k <= n:
        raise PerturbLabError(f"need 1 <= k <= n, got n={n}, k={k}")
    s = float(rho_or_margin)
    if (kind == MULT and not s > 1) or (kind == ADD and not s > 0):
        raise PerturbLabError("need rho > 1 (mult) or margin > 0 (add)")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % k
    rng.shuffle(labels)
    C = Clustering(tuple(labels.tolist()))
    lab = C.array()
    iu = np.triu_indices(n, 1)
    same = lab[iu[0]] == lab[iu[1]]
    u = rng.uniform(0.0, 1.0, size=iu[0].size)
    inside = 0.5 + 0.5 * u
    if kind == MULT:
        cross = s * (1.0 + 0.5 * u)
    else:
        cross = 1.0 + s + 0.5 * u
    vals = np.where(same, inside, cross)
    d = DissimMatrix.from_condensed(vals, n)
    prof = separability_profile(d, C)
    got = prof.rho if kind == MULT else prof.margin
    if got < s:
        raise AssertionError(f"planted instance only reaches {got} < {s}")
    return d, C


# ---------------------------------------------------------------------------
# cloud of grid cells plus far singletons


@dataclass
class CloudReport:
    feasible: bool
    instance: PairedInstance | None
    params: dict
    out_before: Clustering | None = None
    out_after: Clustering | None = None
    delta_full: Fraction | None = None
    delta_cloud: Fraction | None = None
    target: Fraction | None = None
    reason: str = ""

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "params": self.params,
            "out_before": None if self.out_before is None else list(self.out_before.labels),
            "out_after": None if self.out_after is None else list(self.out_after.labels),
            "delta_full": None if self.delta_full is None else str(self.delta_full),
            "delta_cloud": None if self.delta_cloud is None else str(self.delta_cloud),
            "delta_cloud_float": None if self.delta_cloud is None else float(self.delta_cloud),
            "target": None if self.target is None else str(self.target),
            "reason": self.reason,
        }


def cloud_target(k: int, m: int) -> Fraction:
    return Fraction(2 * (k - 1) * m, k * k * (m - 1))


def cloud_matrices(k: int, cell_size: int, gamma: float, d_cs: float, d_ss: float):
    """Row-grouped and column-grouped cloud matrices sharing the singleton layout.

    Cloud point (i, j, t) sits at index (i * k + j) * cell_size + t (0-based i, j);
    the k - 1 singletons follow the cloud.
    """
    m = k * k * cell_size
    n = m + k - 1
    idx = np.arange(m)
    cell = idx // cell_size
    row, col = cell // k, cell % k
    d = np.empty((n, n))
    d2 = np.empty((n, n))
    d[:m, :m] = np.where(row[:, None] == row[None, :], 1.0, 1.0 + gamma)
    d2[:m, :m] = np.where(col[:, None] == col[None, :], 1.0, 1.0 + gamma)
    for M in (d, d2):
        M[:m, m:] = d_cs
        M[m:, :m] = d_cs
        M[m:, m:] = d_ss
        np.fill_diagonal(M, 0.0)
    return DissimMatrix(d), DissimMatrix(d2), row, col


def gen_cloud_singletons(k: int, cell_size: int, gamma: float, d_cs: float, d_ss: float, alpha: float,
                         objective="kmeans") -> CloudReport:
    """Build the cloud pair and let the exact solver say what happens on each side."""
    from .objectives import exact_optimize

    params = {"k": k, "cell_size": cell_size, "gamma": gamma, "d_cs": d_cs, "d_ss": d_ss,
              "alpha": alpha, "objective": str(objective)}
    if k < 2 or cell_size < 1:
        raise PerturbLabError("need k >= 2 and cell_size >= 1")
    if gamma < 0:
        raise PerturbLabError("gamma must be nonnegative")
    m = k * k * cell_size
    target = cloud_target(k, m)
    spec = PerturbSpec.mult(alpha)
    if 1.0 + gamma > alpha:
        return CloudReport(False, None, params, target=target,
                           reason=f"1 + gamma = {1 + gamma} exceeds alpha = {alpha}; the row/column swap is not an alpha-perturbation")
    d, d2, row, col = cloud_matrices(k, cell_size, gamma, d_cs, d_ss)
    if not is_valid_perturbation(d, d2, spec):
        return CloudReport(False, None, params, target=target, reason="pair fails the validity check")
    before, _ = exact_optimize(objective, d, k)
    after, _ = exact_optimize(objective, d2, k)
    dc = hamming(Clustering(tuple(before.labels[:m])), Clustering(tuple(after.labels[:m])))
    inst = PairedInstance(d, d2, spec, before, after, params)
    ok = dc >= target
    return CloudReport(ok, inst, params, before, after, hamming(before, after), dc, target,
                       "" if ok else f"cloud-restricted change {dc} is below the target {target}")


def sweep_cloud_singletons(k: int = 2, cell_size: int = 2, gamma: float = 0.5, alpha: float = 2.0,
                           d_cs_values=None, d_ss_values=None, objective="kmeans"):
    """Try singleton placements in order; return (first feasible report, every report)."""
    if d_cs_values is None:
        d_cs_values = [0.5, 1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0]
    if d_ss_values is None:
        d_ss_values = [1.0, 5.0, 10.0] if k > 2 else [1.0]
    reports = []
    for d_cs, d_ss in itertools.product(d_cs_values, d_ss_values):
        rep = gen_cloud_singletons(k, cell_size, gamma, d_cs, d_ss, alpha, objective)
        reports.append(rep)
        if rep.feasible:
            return rep, reports
    return None, reports


# ---------------------------------------------------------------------------
# Euclidean three points


def _euclid(P: np.ndarray) -> np.ndarray:
    diff = P[:, None, :] - P[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


@dataclass
class EuclideanReport:
    instance: PairedInstance | None
    valid: bool
    worst_pair: tuple[int, int] | None
    worst_value: float
    placement: str

    def to_dict(self):
        return {"valid": self.valid, "worst_pair": self.worst_pair, "worst_value": self.worst_value,
                "placement": self.placement,
                "manifest": None if self.instance is None else self.instance.manifest()}


def gen_euclidean_three_body(dim: int, eps_prime: float, kind, param: float, r: int = 1,
                             placement: str = "valid") -> EuclideanReport:
    """Points a = 1, b = (2 + e') 1, c = (3 + e') 1 in R^dim; b is moved to flip the closest pair.

    ``placement="valid"`` moves b so every distance changes by at most the
    allowed amount: toward a by the factor alpha (multiplicative), or by
    eps along the unit diagonal (additive).  ``placement="as_printed"``
    uses the coordinate rule (2 + e') / alpha or (2 + e' - eps) per
    coordinate, which is reported invalid when it breaks the bound.
    """
    kind = as_kind(kind)
    if dim < 1 or r < 1 or not eps_prime > 0:
        raise PerturbLabError("need dim >= 1, r >= 1 and eps_prime > 0")
    one = np.ones(dim)
    a, b, c = one, (2.0 + eps_prime) * one, (3.0 + eps_prime) * one
    spec = PerturbSpec.of(kind, param)
    if placement == "valid":
        if kind == MULT:
            b2 = a + (b - a) / param
        else:
            b2 = b - (param / np.sqrt(dim)) * one
    elif placement == "as_printed":
        b2 = (2.0 + eps_prime) / param * one if kind == MULT else (2.0 + eps_prime - param) * one
    else:
        raise PerturbLabError("placement must be 'valid' or 'as_printed'")
    P = np.stack([a, b, c])
    P2 = np.stack([a, b2, c])
    reps = np.arange(3 * r) % 3
    P, P2 = P[reps], P2[reps]
    d = DissimMatrix(_euclid(P))
    d2 = DissimMatrix(_euclid(P2))
    rep = is_valid_perturbation(d, d2, spec)
    inst = PairedInstance(
        d, d2, spec,
        replicate_clustering(Clustering((0, 1, 1)), r), replicate_clustering(Clustering((0, 0, 1)), r),
        {"construction": "euclidean three-body", "dim": dim, "eps_prime": eps_prime, "kind": kind,
         "param": param, "r": r, "placement": placement},
        coords=(P, P2),
    )
    return EuclideanReport(inst, rep.valid, rep.worst_pair, rep.worst_value, placement)
