"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both backends are imported directly, so no environment juggling is needed.
Each row reports the best of ``repeat`` runs.
"""

import argparse
import json
import time

import numpy as np

from perturblab import kernels
from perturblab.core import partition_table

py = kernels.python_backend
cy = kernels.compiled_backend


def rand_matrix(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 5.0, size=(n, n))
    a = np.triu(a, 1)
    return a + a.T


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    for n, k in [(8, 3), (10, 3), (12, 3)]:
        d = rand_matrix(n)
        _, masks = partition_table(n, k)
        for obj, name in [(0, "kmeans"), (1, "kmedoids"), (2, "minsum")]:
            yield (f"exact {name} n={n} k={k}",
                   lambda b, d=d, obj=obj, masks=masks: b.exact_argmin(d, obj, masks, 1e-9))
    d = rand_matrix(8, 1)
    _, masks = partition_table(8, 2)
    stack = np.repeat(d[None], 2000, axis=0)
    for obj in (0, 1, 2):
        yield (f"batch x2000 obj={obj} n=8 k=2",
               lambda b, obj=obj: b.ExactArgmin(8, obj, masks, 1e-9).batch(stack))
    for n in (60, 200):
        d = rand_matrix(n, 2)
        for m, name in [(0, "single"), (1, "average"), (2, "complete")]:
            yield f"linkage {name} n={n}", lambda b, d=d, m=m: b.linkage(d, 3, m)
    _, masks = partition_table(12, 3)
    ref = masks[len(masks) // 2]
    yield "disagreement counts n=12 k=3", lambda b: b.disagreement_counts(masks, ref)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args()
    if cy is None:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    rows = []
    print(f"{'case':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases():
        tp = best_of(lambda: fn(py), args.repeat)
        tc = best_of(lambda: fn(cy), args.repeat)
        rows.append({"case": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc})
        print(f"{name:40s} {tp * 1e3:12.3f} {tc * 1e3:12.3f} {tp / tc:8.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
