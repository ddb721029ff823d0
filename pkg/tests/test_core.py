import json
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perturblab.core import (
    CapExceededError,
    Clustering,
    DissimMatrix,
    MergeTrace,
    PerturbLabError,
    canonicalize,
    enumerate_k_partitions,
    format_matrix_csv,
    hamming,
    is_refinement,
    iter_rgs_chunks,
    partition_table,
    read_matrix_csv,
    replicate,
    set_enumeration_cap,
    stirling2,
    validate_dissim,
)


def stirling_rec(n, k, memo={}):
    if (n, k) in memo:
        return memo[n, k]
    if n == k:
        v = 1
    elif k == 0 or k > n:
        v = 0
    else:
        v = k * stirling_rec(n - 1, k) + stirling_rec(n - 1, k - 1)
    memo[n, k] = v
    return v


def brute_hamming(a, b):
    n = len(a)
    pairs = list(combinations(range(n), 2))
    bad = sum((a[x] == a[y]) != (b[x] == b[y]) for x, y in pairs)
    return Fraction(bad, len(pairs))


labels_st = st.integers(2, 10).flatmap(
    lambda n: st.lists(st.integers(0, n - 1), min_size=n, max_size=n))


class TestValidate:
    def test_zero_matrix(self):
        d = validate_dissim(np.zeros((3, 3)))
        assert d.n == 3 and not d.entries.any()

    def test_midpoint_symmetrization(self):
        raw = np.zeros((2, 2))
        raw[0, 1], raw[1, 0] = 1.0, 1.0 + 1e-12
        d = validate_dissim(raw, 1e-9)
        assert d[0, 1] == d[1, 0] == pytest.approx(1.0 + 5e-13, abs=1e-16)

    def test_asymmetry_names_pair(self):
        raw = [[0, 1, 0], [2, 0, 0], [0, 0, 0]]
        with pytest.raises(PerturbLabError, match=r"\(0,1\)"):
            validate_dissim(raw)

    def test_negative_and_diagonal(self):
        with pytest.raises(PerturbLabError, match="negative"):
            validate_dissim([[0, -1], [-1, 0]])
        with pytest.raises(PerturbLabError, match="diagonal"):
            validate_dissim([[1, 0], [0, 0]])

    def test_not_square(self):
        with pytest.raises(PerturbLabError):
            validate_dissim([[0, 1, 2], [1, 0, 3]])

    def test_immutable(self, pairs4):
        with pytest.raises(ValueError):
            pairs4.entries[0, 1] = 5.0


class TestClustering:
    def test_canonical(self):
        c = Clustering((2, 2, 0, 1))
        assert c.labels == (0, 0, 1, 2) and c.k == 3

    def test_json_roundtrip(self):
        c = Clustering((0, 1, 0, 2))
        assert Clustering.from_json(json.loads(json.dumps(c.to_json()))) == c

    def test_from_blocks(self):
        assert Clustering.from_blocks([[1, 3], [0, 2]]).labels == (0, 1, 0, 1)
        with pytest.raises(PerturbLabError):
            Clustering.from_blocks([[0, 1], [1, 2]])

    @given(labels_st)
    def test_canonicalize_idempotent(self, labels):
        c = canonicalize(labels)
        assert canonicalize(c) == c


class TestHamming:
    def test_identical(self):
        c = Clustering((0, 1, 1, 2))
        assert hamming(c, c) == 0

    def test_three_points(self):
        assert hamming(Clustering((0, 1, 1)), Clustering((0, 0, 1))) == Fraction(2, 3)

    def test_four_points(self):
        assert hamming(Clustering((0, 0, 1, 1)), Clustering((0, 1, 0, 1))) == Fraction(4, 6)

    def test_max_one(self):
        assert hamming(Clustering((0, 0)), Clustering((0, 1))) == 1

    def test_mismatch(self):
        with pytest.raises(PerturbLabError):
            hamming(Clustering((0, 1)), Clustering((0, 1, 1)))

    @given(labels_st, st.randoms())
    def test_matches_pair_count(self, a, rnd):
        b = [rnd.randrange(len(a)) for _ in a]
        assert hamming(Clustering(tuple(a)), Clustering(tuple(b))) == brute_hamming(a, b)

    @settings(max_examples=200)
    @given(st.integers(2, 10).flatmap(lambda n: st.tuples(*[
        st.lists(st.integers(0, n - 1), min_size=n, max_size=n) for _ in range(3)])))
    def test_pseudometric(self, triple):
        a, b, c = (Clustering(tuple(x)) for x in triple)
        assert hamming(a, b) == hamming(b, a)
        assert hamming(a, a) == 0
        assert hamming(a, c) <= hamming(a, b) + hamming(b, c)
        assert 0 <= hamming(a, b) <= 1


class TestRefinement:
    def test_singletons(self):
        assert is_refinement(Clustering.singletons(4), Clustering((0, 0, 1, 1)))

    def test_merge(self):
        assert is_refinement(Clustering((0, 0, 1, 2)), Clustering((0, 0, 0, 1)))

    def test_straddle(self):
        assert not is_refinement(Clustering((0, 1, 0, 1)), Clustering((0, 0, 1, 1)))


class TestEnumeration:
    @pytest.mark.parametrize("n,k,count", [(3, 3, 1), (4, 2, 7), (5, 3, 25)])
    def test_counts(self, n, k, count):
        assert len(list(enumerate_k_partitions(n, k))) == count

    @pytest.mark.parametrize("n", range(1, 13))
    def test_stirling_recurrence(self, n):
        for k in range(0, n + 1):
            assert stirling2(n, k) == stirling_rec(n, k)

    @pytest.mark.parametrize("n,k", [(6, 3), (7, 2), (7, 4), (8, 5)])
    def test_distinct_canonical_lex(self, n, k):
        parts = [c.labels for c in enumerate_k_partitions(n, k)]
        assert len(parts) == len(set(parts)) == stirling2(n, k)
        assert parts == sorted(parts)
        assert all(canonicalize(p) == p and max(p) == k - 1 for p in parts)

    def test_chunked_matches_table(self):
        rows, _ = partition_table(9, 4)
        chunks = np.concatenate(list(iter_rgs_chunks(9, 4, 500)))
        assert np.array_equal(rows, chunks)

    def test_cap(self):
        with pytest.raises(CapExceededError, match="cap"):
            next(enumerate_k_partitions(15, 2))
        set_enumeration_cap(3)
        try:
            with pytest.raises(CapExceededError):
                next(enumerate_k_partitions(4, 2))
        finally:
            set_enumeration_cap(None)


class TestReplicate:
    def test_identity(self, tri123):
        d, origin = replicate(tri123, 1)
        assert d == tri123 and origin == (0, 1, 2)

    def test_three_body_r2(self, tri123):
        d, origin = replicate(tri123, 2)
        assert d.n == 6
        assert d[1, 4] == 0  # the two copies of b
        assert d[4, 2] == tri123[1, 2] and d[1, 5] == tri123[1, 2]

    def test_two_points_r3(self):
        d, origin = replicate(DissimMatrix([[0, 5], [5, 0]]), 3)
        D = np.asarray(d)
        groups = np.asarray(origin)
        cross = groups[:, None] != groups[None, :]
        assert (D[cross] == 5).sum() == 18  # 9 unordered pairs, both triangles
        assert (D[~cross] == 0).all()

    @given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_restriction_recovers(self, n, r, seed):
        rng = np.random.default_rng(seed)
        a = np.triu(rng.uniform(0, 3, (n, n)), 1)
        d = DissimMatrix(a + a.T)
        dr, origin = replicate(d, r)
        assert dr.restrict(list(range(n))) == d
        assert all(origin[j] == j % n for j in range(n * r))


class TestIO:
    def test_csv_roundtrip_with_labels(self):
        d = DissimMatrix([[0, 0.1, 2], [0.1, 0, 1 / 3], [2, 1 / 3, 0]], labels=["x", "y", "z"])
        back = read_matrix_csv(format_matrix_csv(d))
        assert back == d and back.labels == ("x", "y", "z")

    def test_malformed(self):
        with pytest.raises(PerturbLabError):
            read_matrix_csv("0,1\n1,zero\n")
        with pytest.raises(PerturbLabError):
            read_matrix_csv("0,1,2\n1,0,3\n")


def test_merge_trace_replay():
    t = MergeTrace(((0, 1, 1.0), (1, 2, 1.0), (0, 1, 10.0)), 4)
    got = [c.labels for c in t.clusterings()]
    assert got[0] == (0, 1, 2, 3)
    assert got[-1] == (0, 0, 0, 0)
    assert len(t) == 3
