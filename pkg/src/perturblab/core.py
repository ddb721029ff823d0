"""Dissimilarity matrices, clusterings, Hamming distance and partition enumeration."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterator, Sequence

import numpy as np

DEFAULT_MAX_N = 14
TABLE_ROW_LIMIT = 1 << 21

_cap_override: int | None = None


class PerturbLabError(ValueError):
    """Base error for invalid inputs."""


class CapExceededError(PerturbLabError):
    pass


def enumeration_cap() -> int:
    if _cap_override is not None:
        return _cap_override
    env = os.environ.get("PERTURBLAB_MAX_N")
    return int(env) if env else DEFAULT_MAX_N


def set_enumeration_cap(n: int | None) -> None:
    """Override the exhaustive-enumeration point cap (``None`` restores the default)."""
    global _cap_override
    _cap_override = n


def check_cap(n: int, cap: int | None = None) -> None:
    cap = enumeration_cap() if cap is None else cap
    if n > cap:
        raise CapExceededError(
            f"n={n} exceeds the enumeration cap of {cap} points; raise it explicitly "
            "(set_enumeration_cap, PERTURBLAB_MAX_N or --max-n) if you really want this"
        )


class DissimMatrix:
    """Immutable symmetric, nonnegative dissimilarity table with a zero diagonal.

    Symmetry is structural: every constructor path writes both triangles from
    one value.  Use :func:`validate_dissim` to ingest untrusted tables.
    """

    __slots__ = ("_d", "labels")

    def __init__(self, entries, labels: Sequence[str] | None = None, *, _trusted: bool = False):
        d = np.array(entries, dtype=np.float64)
        if not _trusted:
            if d.ndim != 2 or d.shape[0] != d.shape[1]:
                raise PerturbLabError(f"dissimilarity table must be square, got shape {d.shape}")
            if not np.all(np.isfinite(d)):
                raise PerturbLabError("dissimilarities must be finite")
            if np.any(np.diag(d) != 0):
                raise PerturbLabError("diagonal must be zero")
            if not np.array_equal(d, d.T):
                raise PerturbLabError("table is not symmetric; ingest it with validate_dissim")
            if np.any(d < 0):
                raise PerturbLabError("dissimilarities must be nonnegative")
        d.setflags(write=False)
        self._d = d
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != d.shape[0]:
                raise PerturbLabError("label count does not match matrix size")
        self.labels = labels

    @property
    def n(self) -> int:
        return self._d.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._d

    def __array__(self, dtype=None, copy=None):
        return self._d if dtype is None else self._d.astype(dtype)

    def __getitem__(self, idx):
        return self._d[idx]

    def __eq__(self, other):
        return isinstance(other, DissimMatrix) and np.array_equal(self._d, other._d)

    def __hash__(self):
        return hash(self._d.tobytes())

    def __repr__(self):
        return f"DissimMatrix(n={self.n})"

    def condensed(self) -> np.ndarray:
        iu = np.triu_indices(self.n, 1)
        return self._d[iu]

    @classmethod
    def from_condensed(cls, values, n: int, labels=None) -> "DissimMatrix":
        d = np.zeros((n, n))
        iu = np.triu_indices(n, 1)
        d[iu] = values
        d.T[iu] = values
        return cls(d, labels)

    def restrict(self, indices: Sequence[int]) -> "DissimMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        labels = None if self.labels is None else [self.labels[i] for i in idx]
        return DissimMatrix(self._d[np.ix_(idx, idx)], labels, _trusted=True)

    def scaled(self, lam: float) -> "DissimMatrix":
        return DissimMatrix(self._d * lam, self.labels, _trusted=True)


def validate_dissim(raw, tolerance: float = 1e-9, labels=None) -> DissimMatrix:
    """Check a raw square table and return a symmetric :class:`DissimMatrix`.

    Off-diagonal pairs within ``tolerance`` of each other are replaced by
    their midpoint; the diagonal is forced to zero.
    """
    a = np.array(raw, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PerturbLabError(f"dissimilarity table must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PerturbLabError("dissimilarities must be finite")
    diag = np.abs(np.diag(a))
    if diag.size and diag.max() > tolerance:
        i = int(diag.argmax())
        raise PerturbLabError(f"nonzero diagonal entry at ({i},{i}): {a[i, i]!r}")
    if np.any(a < 0):
        i, j = map(int, np.argwhere(a < 0)[0])
        raise PerturbLabError(f"negative dissimilarity at ({i},{j}): {a[i, j]!r}")
    asym = np.abs(a - a.T)
    if asym.size and asym.max() > tolerance:
        i, j = map(int, np.unravel_index(int(asym.argmax()), asym.shape))
        i, j = min(i, j), max(i, j)
        raise PerturbLabError(
            f"asymmetric pair ({i},{j}): {a[i, j]!r} vs {a[j, i]!r} differ by more than {tolerance}"
        )
    d = (a + a.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return DissimMatrix(d, labels, _trusted=True)


def canonicalize(labels: Sequence[int]) -> tuple[int, ...]:
    """Relabel blocks in order of first appearance (restricted-growth string)."""
    seen: dict = {}
    out = []
    for x in labels:
        if x not in seen:
            seen[x] = len(seen)
        out.append(seen[x])
    return tuple(out)


@dataclass(frozen=True, order=True)
class Clustering:
    """Partition of ``n`` indexed points, stored as a canonical label string."""

    labels: tuple[int, ...]
    k: int = field(init=False, compare=False)

    def __post_init__(self):
        labels = canonicalize(int(x) for x in self.labels)
        if not labels:
            raise PerturbLabError("a clustering needs at least one point")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "k", max(labels) + 1)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], n: int | None = None) -> "Clustering":
        n = sum(len(b) for b in blocks) if n is None else n
        labels = [-1] * n
        for j, block in enumerate(blocks):
            for x in block:
                if labels[x] != -1:
                    raise PerturbLabError(f"point {x} appears in two blocks")
                labels[x] = j
        if -1 in labels:
            raise PerturbLabError("blocks do not cover every point")
        return cls(tuple(labels))

    @classmethod
    def singletons(cls, n: int) -> "Clustering":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def blocks(self) -> list[tuple[int, ...]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for i, b in enumerate(self.labels):
            out[b].append(i)
        return [tuple(b) for b in out]

    def masks(self) -> tuple[int, ...]:
        out = [0] * self.k
        for i, b in enumerate(self.labels):
            out[b] |= 1 << i
        return tuple(out)

    def array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def together(self, x: int, y: int) -> bool:
        return self.labels[x] == self.labels[y]

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "labels": list(self.labels)}

    @classmethod
    def from_json(cls, obj: dict) -> "Clustering":
        c = cls(tuple(obj["labels"]))
        if "n" in obj and obj["n"] != c.n:
            raise PerturbLabError("clustering JSON: n does not match label count")
        if "k" in obj and obj["k"] != c.k:
            raise PerturbLabError("clustering JSON: k does not match the labels")
        return c

    def __str__(self):
        return "{" + ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks()) + "}"


@dataclass(frozen=True)
class MergeTrace:
    """Merges of an agglomerative run: (blockA, blockB, linkage value) per step.

    Block indices refer to the canonical clustering just before the merge.
    """

    merges: tuple[tuple[int, int, float], ...]
    n: int

    def __len__(self):
        return len(self.merges)

    def clusterings(self) -> Iterator[Clustering]:
        """Replay the trace, yielding the clustering after every merge (starting from singletons)."""
        blocks = [[i] for i in range(self.n)]
        yield Clustering.singletons(self.n)
        for a, b, _ in self.merges:
            merged = blocks[a] + blocks[b]
            rest = [blk for j, blk in enumerate(blocks) if j not in (a, b)]
            blocks = sorted(rest + [sorted(merged)], key=min)
            yield Clustering.from_blocks(blocks, self.n)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"step": s, "a": a, "b": b, "distance": v}) + "\n"
            for s, (a, b, v) in enumerate(self.merges)
        )


def disagreement_count(c1: Clustering, c2: Clustering) -> int:
    """Number of unordered pairs that are together in exactly one clustering."""
    if c1.n != c2.n:
        raise PerturbLabError(f"clusterings cover different point sets (n={c1.n} vs n={c2.n})")
    return label_disagreements(c1.array(), c2.array())


def label_disagreements(a: np.ndarray, b: np.ndarray) -> int:
    """Pair-disagreement count for two label vectors via the contingency table."""
    ka, kb = int(a.max()) + 1, int(b.max()) + 1
    table = np.bincount(a * kb + b, minlength=ka * kb).astype(np.int64)
    both = int((table * (table - 1) // 2).sum())
    ra = np.bincount(a).astype(np.int64)
    rb = np.bincount(b).astype(np.int64)
    ta = int((ra * (ra - 1) // 2).sum())
    tb = int((rb * (rb - 1) // 2).sum())
    return ta + tb - 2 * both


def hamming(c1: Clustering, c2: Clustering) -> Fraction:
    """Fraction of point pairs whose in/between-cluster status differs (exact)."""
    if c1.n != c2.n:
        raise PerturbLabError(f"clusterings cover different point sets (n={c1.n} vs n={c2.n})")
    if c1.n < 2:
        raise PerturbLabError("Hamming distance needs at least two points")
    return Fraction(disagreement_count(c1, c2), comb(c1.n, 2))


def is_refinement(fine: Clustering, coarse: Clustering) -> bool:
    if fine.n != coarse.n:
        raise PerturbLabError(f"clusterings cover different point sets (n={fine.n} vs n={coarse.n})")
    owner: dict[int, int] = {}
    for f, c in zip(fine.labels, coarse.labels):
        if owner.setdefault(f, c) != c:
            return False
    return True


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling numbers of the second kind by the standard recurrence."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@lru_cache(maxsize=None)
def _completions(r: int, b: int, k: int) -> int:
    # ways to label r more points, b blocks already open, ending with exactly k
    if r == 0:
        return 1 if b == k else 0
    total = b * _completions(r - 1, b, k)
    if b < k:
        total += _completions(r - 1, b + 1, k)
    return total


def _extend(rows: np.ndarray, maxes: np.ndarray, start: int, n: int, k: int, stop: int | None = None):
    stop = n if stop is None else stop
    for i in range(start, stop):
        need = k - 1 - (n - i - 1)
        hi = np.minimum(maxes + 1, k - 1)
        lo = np.where(maxes >= need, 0, maxes + 1)
        counts = hi - lo + 1
        rep = np.repeat(np.arange(rows.shape[0]), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        vals = (lo[rep] + np.arange(rep.size) - starts).astype(np.int8)
        rows = np.concatenate([rows[rep], vals[:, None]], axis=1)
        maxes = np.maximum(maxes[rep], vals)
    return rows, maxes


def _check_nk(n: int, k: int) -> None:
    if not (1 <= k <= n):
        raise PerturbLabError(f"need 1 <= k <= n, got n={n}, k={k}")
    if n > 62:
        raise PerturbLabError("bitmask enumeration supports at most 62 points")


def iter_rgs_chunks(n: int, k: int, chunk_rows: int = TABLE_ROW_LIMIT) -> Iterator[np.ndarray]:
    """Yield label arrays (int8, one row per partition) in lexicographic order."""
    _check_nk(n, k)
    root = (np.zeros((1, 1), dtype=np.int8), np.zeros(1, dtype=np.int8))

    def expand(rows, maxes, col):
        if col == n:
            yield rows
            return
        sizes = [_completions(n - col, int(m) + 1, k) for m in maxes]
        if sum(sizes) <= chunk_rows:
            yield _extend(rows, maxes, col, n, k)[0]
            return
        group: list[int] = []
        acc = 0
        for r, s in enumerate(sizes):
            if s > chunk_rows:
                if group:
                    yield _extend(rows[group], maxes[group], col, n, k)[0]
                    group, acc = [], 0
                nr, nm = _extend(rows[r:r + 1], maxes[r:r + 1], col, n, k, stop=col + 1)
                yield from expand(nr, nm, col + 1)
            else:
                if acc + s > chunk_rows and group:
                    yield _extend(rows[group], maxes[group], col, n, k)[0]
                    group, acc = [], 0
                group.append(r)
                acc += s
        if group:
            yield _extend(rows[group], maxes[group], col, n, k)[0]

    yield from expand(*root, 1)


def masks_from_rows(rows: np.ndarray, k: int) -> np.ndarray:
    P, n = rows.shape
    masks = np.zeros((P, k), dtype=np.int64)
    for i in range(n):
        col = rows[:, i]
        bit = np.int64(1) << np.int64(i)
        for b in range(k):
            masks[:, b] |= np.where(col == b, bit, np.int64(0))
    return masks


@lru_cache(maxsize=32)
def partition_table(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """All k-partitions of n points as (labels, block masks), cached and read-only."""
    _check_nk(n, k)
    if stirling2(n, k) > TABLE_ROW_LIMIT:
        raise CapExceededError(f"S({n},{k}) = {stirling2(n, k)} partitions is too many to tabulate; stream instead")
    rows = next(iter_rgs_chunks(n, k, TABLE_ROW_LIMIT))
    masks = masks_from_rows(rows, k)
    rows.setflags(write=False)
    masks.setflags(write=False)
    return rows, masks


def enumerate_k_partitions(n: int, k: int, cap: int | None = None) -> Iterator[Clustering]:
    """Every partition of ``range(n)`` into exactly ``k`` blocks, in lexicographic order."""
    check_cap(n, cap)
    _check_nk(n, k)
    for rows in iter_rgs_chunks(n, k):
        for row in rows.tolist():
            yield Clustering(tuple(row))


def replicate(d: DissimMatrix, r: int) -> tuple[DissimMatrix, tuple[int, ...]]:
    """Give every point ``r`` coincident copies.

    Index ``j`` of the result comes from point ``j % n``; the first ``n``
    indices are the originals.
    """
    if r < 1:
        raise PerturbLabError("replication factor must be a positive integer")
    origin = tuple(j % d.n for j in range(r * d.n))
    idx = np.asarray(origin)
    labels = None if d.labels is None else [f"{d.labels[o]}" if j < d.n else f"{d.labels[o]}#{j // d.n}"
                                            for j, o in enumerate(origin)]
    return DissimMatrix(d.entries[np.ix_(idx, idx)], labels, _trusted=True), origin


def replicate_clustering(c: Clustering, r: int) -> Clustering:
    return Clustering(c.labels * r)


# --- I/O -------------------------------------------------------------------


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_matrix_csv(path_or_text, tolerance: float = 1e-9) -> DissimMatrix:
    """Read an n x n CSV, with an optional header row of point labels.

    Accepts a path, or the CSV text itself (anything containing a comma or newline).
    """
    is_text = isinstance(path_or_text, str) and ("," in path_or_text or "\n" in path_or_text)
    if not is_text:
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    else:
        text = str(path_or_text)
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(t.strip() for t in r)]
    if not rows:
        raise PerturbLabError("empty matrix CSV")
    labels = None
    if not all(_is_number(t) for t in rows[0]):
        labels = [t.strip() for t in rows[0]]
        rows = rows[1:]
    try:
        raw = [[float(t) for t in r] for r in rows]
    except ValueError as exc:
        raise PerturbLabError(f"malformed matrix CSV: {exc}") from None
    if any(len(r) != len(raw) for r in raw):
        raise PerturbLabError("matrix CSV is not square")
    return validate_dissim(raw, tolerance, labels)


def format_matrix_csv(d: DissimMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if d.labels is not None:
        w.writerow(d.labels)
    for row in d.entries:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def write_matrix_csv(d: DissimMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_matrix_csv(d))


def read_clustering_json(path) -> Clustering:
    with open(path) as fh:
        return Clustering.from_json(json.load(fh))
