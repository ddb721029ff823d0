"""Command-line front end.

Exit codes: 0 success / property holds, 1 property refuted or violated
(witness files written when --out is given), 2 usage or input error.
Every report is printed as JSON on stdout and, with ``--out DIR``, also
written to ``DIR/report.json`` next to any matrices.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    Clustering,
    DissimMatrix,
    PerturbLabError,
    enumerate_k_partitions,
    read_clustering_json,
    read_matrix_csv,
    set_enumeration_cap,
    stirling2,
    write_matrix_csv,
)

OK, REFUTED, USAGE = 0, 1, 2
FUNCTION_NAMES = ["kmeans", "kmedoids", "minsum", "single", "average", "complete"]


class UsageError(Exception):
    pass


def _clean(obj):
    """Make a report JSON-safe: Fractions as strings, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Clustering):
        return list(obj.labels)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


class Context:
    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out) if getattr(args, "out", None) else None
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def matrix(self, d: DissimMatrix, name: str):
        if self.out:
            write_matrix_csv(d, self.out / name)

    def text(self, body: str, name: str):
        if self.out:
            (self.out / name).write_text(body)

    def finish(self, report: dict, code: int) -> int:
        report = {"command": ["perturblab"] + self.argv, "version": __version__, "exit_code": code, **report}
        body = dumps(report)
        sys.stdout.write(body)
        if self.out:
            (self.out / "report.json").write_text(body)
        return code


# ---------------------------------------------------------------------------
# helpers


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"missing required option --{n.replace('_', '-')}")


def _input(args) -> DissimMatrix:
    _need(args, "input")
    return read_matrix_csv(Path(args.input))


def _spec(args):
    from .perturb import PerturbSpec

    _need(args, "kind")
    kind = args.kind
    size = getattr(args, "size", None)
    if kind in ("mult", "multiplicative"):
        size = args.alpha if args.alpha is not None else size
        if size is None:
            raise UsageError("multiplicative perturbations need --alpha (or --size)")
        return PerturbSpec.mult(size)
    size = args.epsilon if args.epsilon is not None else size
    if size is None:
        raise UsageError("additive perturbations need --epsilon (or --size)")
    return PerturbSpec.add(size)


def _delta(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot read delta {text!r}; use a decimal or a fraction like 2/3") from None


# ---------------------------------------------------------------------------
# commands


def cmd_cluster(ctx: Context) -> int:
    from .linkage import linkage_run
    from .objectives import cost, exact_optimize

    a = ctx.args
    _need(a, "k")
    d = _input(a)
    if (a.objective is None) == (a.linkage is None):
        raise UsageError("give exactly one of --objective or --linkage")
    report = {"n": d.n, "k": a.k}
    if a.objective:
        C, c = exact_optimize(a.objective, d, a.k, threads=a.threads)
        report.update(objective=a.objective, cost=c, cost_direct=cost(a.objective, d, C))
    else:
        C, trace = linkage_run(a.linkage, d, a.k)
        report.update(linkage=a.linkage, merges=[list(m) for m in trace.merges])
        if a.trace:
            Path(a.trace).write_text(trace.to_jsonl())
    report.update(labels=list(C.labels), blocks=[list(b) for b in C.blocks()])
    if d.labels:
        report["blocks_named"] = [[d.labels[i] for i in b] for b in C.blocks()]
    ctx.text(json.dumps(C.to_json()) + "\n", "labels.json")
    return ctx.finish(report, OK)


def cmd_perturb(ctx: Context) -> int:
    from .perturb import is_valid_perturbation, sample_perturbation

    a = ctx.args
    _need(a, "seed")
    d = _input(a)
    spec = _spec(a)
    d2 = sample_perturbation(d, spec, a.seed)
    chk = is_valid_perturbation(d, d2, spec)
    ctx.matrix(d2, "perturbed.csv")
    return ctx.finish({"spec": spec.to_dict(), "seed": a.seed, "validity": chk.to_dict(),
                       "matrix": np.asarray(d2).tolist()}, OK)


def cmd_attack(ctx: Context) -> int:
    from .perturb import adversarial_search

    a = ctx.args
    _need(a, "fn", "k", "seed")
    d = _input(a)
    spec = _spec(a)
    delta = _delta(a.delta) if a.delta is not None else None
    res = adversarial_search(a.fn, d, a.k, spec, a.budget, a.seed, stop_at=delta)
    ctx.matrix(res.witness, "witness.csv")
    code = REFUTED if delta is not None and res.delta >= delta else OK
    return ctx.finish({"fn": a.fn, "k": a.k, "spec": spec.to_dict(), "budget": a.budget,
                       "target_delta": None if delta is None else str(delta), **res.to_dict()}, code)


def cmd_certify(ctx: Context) -> int:
    from .bounds import certify

    a = ctx.args
    _need(a, "fn", "k", "delta")
    d = _input(a)
    spec = _spec(a)
    variant = "as_printed" if a.as_printed else a.variant
    v = certify(a.fn, d, a.k, spec, _delta(a.delta), a.budget, a.seed, variant=variant)
    if v.witness is not None:
        ctx.matrix(v.witness, "witness.csv")
    code = REFUTED if v.status == "refuted" else OK
    return ctx.finish({"fn": a.fn, "k": a.k, "spec": spec.to_dict(), "delta": a.delta, "budget": a.budget,
                       "seed": a.seed, **v.to_dict()}, code)


def cmd_clusterability(ctx: Context) -> int:
    from .bounds import best_objective_bound
    from .clusterability import uo_profile

    a = ctx.args
    _need(a, "objective", "k", "delta")
    d = _input(a)
    prof = uo_profile(a.objective, d, a.k, _delta(a.delta))
    report = {"profile": prof.to_dict(), "uniquely_optimal": prof.is_uo}
    if a.c is not None:
        report["c"] = a.c
        report["c0_max"] = prof.c0_max(a.c)
    bounds = {}
    for kind in ("mult", "add"):
        for variant in ("two_sided", "proof_consistent", "as_printed"):
            b, c, c0 = best_objective_bound(prof.objective.value, prof, kind, d.n, variant)
            bounds[f"{kind}/{variant}"] = {"bound": b, "c": c, "c0": c0}
    report["bounds"] = bounds
    return ctx.finish(report, OK if prof.is_uo else REFUTED)


def cmd_separability(ctx: Context) -> int:
    from .clusterability import find_separable_clustering, separability_profile

    a = ctx.args
    d = _input(a)
    if a.labels:
        C = read_clustering_json(Path(a.labels))
    else:
        _need(a, "k")
        C = find_separable_clustering(d, a.k)
        if C is None:
            return ctx.finish({"k": a.k, "found": False}, REFUTED)
    prof = separability_profile(d, C)
    return ctx.finish({"k": C.k, "found": True, "profile": prof.to_dict()}, OK if prof.strict else REFUTED)


def _random_three_body(rng) -> DissimMatrix:
    while True:
        v = rng.uniform(0.1, 10.0, size=3)
        if len(set(v.tolist())) == 3:
            break
    rng.shuffle(v)
    return DissimMatrix([[0, v[0], v[2]], [v[0], 0, v[1]], [v[2], v[1], 0]])


def cmd_axioms(ctx: Context) -> int:
    from .axioms import check_replication_invariance, check_three_body

    a = ctx.args
    _need(a, "fn")
    if a.sweep and a.seed is None:
        raise UsageError("--sweep is randomized and needs --seed")
    fns = FUNCTION_NAMES if a.fn == "all" else [a.fn]
    results = {}
    code = OK
    for name in fns:
        counts = {"holds": 0, "violated": 0, "vacuous": 0}
        witnesses = []
        instances = [DissimMatrix([[0, 2, 3], [2, 0, 1], [3, 1, 0]])]
        if a.sweep:
            rng = np.random.default_rng(a.seed)
            instances += [_random_three_body(rng) for _ in range(a.sweep)]
        for d in instances:
            rep = check_three_body(name, d)
            counts[rep.status] += 1
            if rep.witness:
                witnesses.append(rep.witness)
        rep_r = check_replication_invariance(name, instances[0], 2, a.r)
        results[name] = {"three_body": counts, "three_body_witnesses": witnesses[:5],
                         "replication": rep_r.to_dict()}
        if counts["violated"] or rep_r.status == "violated":
            code = REFUTED
    ctx.text(dumps(results), "witnesses.json")
    return ctx.finish({"sweep": a.sweep, "seed": a.seed, "r": a.r, "results": results}, code)


def cmd_gen(ctx: Context) -> int:
    from . import generators as g

    a = ctx.args
    fam = a.family
    if fam == "three-body":
        _need(a, "kind")
        spec = _spec(a)
        inst = g.gen_three_body(spec.kind, spec.size, a.r)
        ctx.matrix(inst.d, "d.csv")
        ctx.matrix(inst.d2, "d2.csv")
        return ctx.finish({"family": fam, "manifest": inst.manifest(), "valid": inst.check().to_dict(),
                           "d": np.asarray(inst.d).tolist(), "d2": np.asarray(inst.d2).tolist()}, OK)
    if fam == "separable":
        _need(a, "n", "k", "seed")
        kind = a.kind or "mult"
        size = a.rho if kind.startswith("mult") else a.margin
        if size is None:
            raise UsageError("separable data needs --rho (mult) or --margin (add)")
        d, C = g.gen_separable(a.n, a.k, size, kind, a.seed)
        ctx.matrix(d, "d.csv")
        ctx.text(json.dumps(C.to_json()) + "\n", "planted.json")
        return ctx.finish({"family": fam, "n": a.n, "k": a.k, "kind": kind, "size": size, "seed": a.seed,
                           "planted": list(C.labels), "d": np.asarray(d).tolist()}, OK)
    if fam == "cloud":
        alpha = a.alpha if a.alpha is not None else 2.0
        if a.d_cs is not None:
            rep = g.gen_cloud_singletons(a.k or 2, a.cell_size, a.gamma, a.d_cs, a.d_ss, alpha, a.objective or "kmeans")
            tried = [rep]
        else:
            rep, tried = g.sweep_cloud_singletons(a.k or 2, a.cell_size, a.gamma, alpha, objective=a.objective or "kmeans")
        if rep is not None and rep.instance is not None:
            ctx.matrix(rep.instance.d, "d.csv")
            ctx.matrix(rep.instance.d2, "d2.csv")
        found = rep is not None and rep.feasible
        return ctx.finish({"family": fam, "found": found, "result": None if rep is None else rep.to_dict(),
                           "tried": [t.to_dict() for t in tried]}, OK if found else REFUTED)
    if fam == "euclidean":
        _need(a, "kind")
        spec = _spec(a)
        rep = g.gen_euclidean_three_body(a.dim, a.eps_prime, spec.kind, spec.size, a.r, a.placement)
        ctx.matrix(rep.instance.d, "d.csv")
        ctx.matrix(rep.instance.d2, "d2.csv")
        P, P2 = rep.instance.coords
        return ctx.finish({"family": fam, **rep.to_dict(), "coords_before": P.tolist(), "coords_after": P2.tolist(),
                           "d": np.asarray(rep.instance.d).tolist(), "d2": np.asarray(rep.instance.d2).tolist()},
                          OK if rep.valid else REFUTED)
    raise UsageError(f"unknown family {fam}")


def cmd_reproduce(ctx: Context) -> int:
    from .axioms import impossibility_demo, zero_delta_demo
    from .generators import gen_three_body, sweep_cloud_singletons

    a = ctx.args
    if a.target == "thm1":
        _need(a, "kind", "fn")
        spec = _spec(a)
        delta = _delta(a.delta) if a.delta is not None else None
        rep = impossibility_demo(spec.kind, spec.size, a.r, a.fn, delta)
        inst = gen_three_body(spec.kind, spec.size, a.r)
        ctx.matrix(inst.d, "d.csv")
        ctx.matrix(inst.d2, "d2.csv")
        body = rep.to_dict()
        body["delta"] = str(rep.measured)
        body["target_delta"] = str(rep.delta)
        return ctx.finish(body, REFUTED if rep.violated else OK)
    if a.target == "cloud":
        rep, tried = sweep_cloud_singletons(a.k or 2, a.cell_size, a.gamma, a.alpha or 2.0,
                                            objective=a.objective or "kmeans")
        if rep is not None:
            ctx.matrix(rep.instance.d, "d.csv")
            ctx.matrix(rep.instance.d2, "d2.csv")
        # finding the flip refutes robustness at the target delta
        return ctx.finish({"found": rep is not None, "result": None if rep is None else rep.to_dict(),
                           "tried": [t.to_dict() for t in tried]}, REFUTED)
    if a.target == "zero-delta":
        _need(a, "fn", "kind")
        spec = _spec(a)
        demo = zero_delta_demo(a.fn, a.n or 3, a.k or 2, spec)
        if demo is None:
            return ctx.finish({"found": False}, OK)
        t = demo.change_step
        if t is not None:
            ctx.matrix(demo.chain[t - 1], "step_before.csv")
            ctx.matrix(demo.chain[t], "step_after.csv")
        return ctx.finish({"found": True, **demo.to_dict()}, REFUTED if t is not None else OK)
    raise UsageError(f"unknown target {a.target}")


def cmd_enumerate(ctx: Context) -> int:
    a = ctx.args
    _need(a, "n", "k")
    total = stirling2(a.n, a.k)
    if a.count:
        return ctx.finish({"n": a.n, "k": a.k, "count": total}, OK)
    lines = [json.dumps(list(C.labels)) for C in enumerate_k_partitions(a.n, a.k)]
    ctx.text("\n".join(lines) + "\n", "partitions.jsonl")
    return ctx.finish({"n": a.n, "k": a.k, "count": len(lines), "partitions": [json.loads(x) for x in lines]}, OK)


COMMANDS = {
    "cluster": cmd_cluster,
    "perturb": cmd_perturb,
    "attack": cmd_attack,
    "certify": cmd_certify,
    "clusterability": cmd_clusterability,
    "separability": cmd_separability,
    "axioms": cmd_axioms,
    "gen": cmd_gen,
    "reproduce": cmd_reproduce,
    "enumerate": cmd_enumerate,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--out", help="directory for report.json and matrix CSVs")
    common.add_argument("--config", help="JSON file whose keys mirror the long options")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--max-n", type=int, dest="max_n", help="override the enumeration cap")

    def pert(p):
        p.add_argument("--kind", choices=["mult", "add", "multiplicative", "additive"])
        p.add_argument("--alpha", type=float)
        p.add_argument("--epsilon", type=float)

    parser = argparse.ArgumentParser(prog="perturblab", description="clustering perturbation robustness lab",
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["cluster"] = sub.add_parser("cluster", parents=[common], allow_abbrev=False)
    p.add_argument("--input")
    p.add_argument("--k", type=int)
    p.add_argument("--objective", choices=["kmeans", "kmedoids", "minsum"])
    p.add_argument("--linkage", choices=["single", "average", "complete"])
    p.add_argument("--trace", help="write the merge trace as JSON lines")

    p = subs["perturb"] = sub.add_parser("perturb", parents=[common], allow_abbrev=False)
    p.add_argument("--input")
    pert(p)
    p.add_argument("--seed", type=int)

    p = subs["attack"] = sub.add_parser("attack", parents=[common], allow_abbrev=False)
    p.add_argument("--input")
    p.add_argument("--fn", choices=FUNCTION_NAMES)
    p.add_argument("--k", type=int)
    pert(p)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", help="stop and exit 1 once this Hamming change is reached")

    p = subs["certify"] = sub.add_parser("certify", parents=[common], allow_abbrev=False)
    p.add_argument("--input")
    p.add_argument("--fn", choices=FUNCTION_NAMES)
    p.add_argument("--k", type=int)
    pert(p)
    p.add_argument("--size", type=float, help="alpha or epsilon, depending on --kind")
    p.add_argument("--delta")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=["two_sided", "proof_consistent", "as_printed"], default="two_sided")
    p.add_argument("--as-printed", action="store_true", dest="as_printed")

    p = subs["clusterability"] = sub.add_parser("clusterability", parents=[common], allow_abbrev=False)
    p.add_argument("--input")
    p.add_argument("--objective", choices=["kmeans", "kmedoids", "minsum"])
    p.add_argument("--k", type=int)
    p.add_argument("--delta")
    p.add_argument("--c", type=float, help="also report c0_max at this c")

    p = subs["separability"] = sub.add_parser("separability", parents=[common], allow_abbrev=False)
    p.add_argument("--input")
    p.add_argument("--k", type=int)
    p.add_argument("--labels", help="clustering JSON to profile instead of searching")

    p = subs["axioms"] = sub.add_parser("axioms", parents=[common], allow_abbrev=False)
    p.add_argument("--fn", choices=FUNCTION_NAMES + ["all"])
    p.add_argument("--sweep", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--r", type=int, default=3)

    p = subs["gen"] = sub.add_parser("gen", parents=[common], allow_abbrev=False)
    p.add_argument("family", choices=["three-body", "separable", "cloud", "euclidean"])
    pert(p)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--cell-size", type=int, default=2, dest="cell_size")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--d-cs", type=float, dest="d_cs")
    p.add_argument("--d-ss", type=float, default=1.0, dest="d_ss")
    p.add_argument("--objective", choices=["kmeans", "kmedoids", "minsum"])
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--eps-prime", type=float, default=0.01, dest="eps_prime")
    p.add_argument("--placement", choices=["valid", "as_printed"], default="valid")

    p = subs["reproduce"] = sub.add_parser("reproduce", parents=[common], allow_abbrev=False)
    p.add_argument("target", choices=["thm1", "cloud", "zero-delta"])
    pert(p)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--fn", choices=FUNCTION_NAMES)
    p.add_argument("--delta")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--cell-size", type=int, default=2, dest="cell_size")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--objective", choices=["kmeans", "kmedoids", "minsum"])

    p = subs["enumerate"] = sub.add_parser("enumerate", parents=[common], allow_abbrev=False)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--count", action="store_true", help="print only S(n, k)")
    return parser, subs


def _load_config(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    cfg = json.loads(Path(known.config).read_text())
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        cfg = _load_config(argv)
        if cfg:
            for p in subs.values():
                known = {a.dest for a in p._actions}
                unknown = set(cfg) - known - {"command"}
                if unknown and argv and argv[0] in subs and p is subs[argv[0]]:
                    raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
                p.set_defaults(**{k: v for k, v in cfg.items() if k in known})
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return USAGE if e.code not in (0, None) else OK
        if args.max_n is not None:
            set_enumeration_cap(args.max_n)
        try:
            return COMMANDS[args.command](Context(args, argv))
        finally:
            if args.max_n is not None:
                set_enumeration_cap(None)
    except (UsageError, PerturbLabError, OSError, json.JSONDecodeError) as e:
        sys.stderr.write(f"perturblab: error: {e}\n")
        return USAGE


def main() -> None:
    sys.exit(run())
