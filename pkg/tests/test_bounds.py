import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perturblab.bounds import BoundFormula, best_objective_bound, certify, robust_bound
from perturblab.clusterability import uo_profile
from perturblab.core import DissimMatrix, PerturbLabError
from perturblab.generators import gen_separable, gen_three_body
from perturblab.perturb import PerturbSpec, adversarial_search

from conftest import rand_dissim


def bound(*a, **kw):
    return robust_bound(BoundFormula(*a, **kw))


class TestFormulas:
    def test_kmeans_mult(self):
        assert bound("kmeans", "mult", "proof_consistent", c=64.0) == 8.0
        assert bound("kmeans", "mult", c=16.0) == 2.0

    def test_kmeans_add_proof(self):
        # M = 6, min((2-1)/2, (-6 + sqrt(36 + 384)) / 6)
        b = bound("kmeans", "add", "proof_consistent", c=2.0, c0=64.0, n=4)
        assert b == 0.5

    def test_kmeans_add_printed(self):
        b = bound("kmeans", "add", "as_printed", c=10.0, c0=10.0, n=3)
        assert b == pytest.approx((-3 + math.sqrt(9 + 120)) / 6)

    def test_linkage(self):
        assert bound("single", "mult", rho=4.0) == 2.0
        assert bound("linkage-complete", "add", margin=3.0) == 1.5
        assert bound("average", "mult", rho=math.inf) == math.inf

    def test_kmedoids(self):
        assert bound("kmedoids", "mult", "proof_consistent", c=3.0) == 3.0
        assert bound("minsum", "mult", c=9.0) == 3.0
        assert bound("kmedoids", "add", "proof_consistent", c=1.0, c0=6.0, n=4) == 1.0
        assert bound("kmedoids", "add", c=1.0, c0=6.0, n=4) == 0.5
        assert bound("kmedoids", "add", "as_printed", c=2.0, c0=6.0, n=4) == 1.0

    def test_c_not_one(self):
        with pytest.raises(PerturbLabError):
            bound("minsum", "add", c=1.5, c0=1.0, n=4)

    def test_bad(self):
        with pytest.raises(PerturbLabError):
            bound("kmeans", "mult", c=0.5)
        with pytest.raises(PerturbLabError):
            bound("kmeans", "add", c=1.0)
        with pytest.raises(PerturbLabError):
            BoundFormula("ward", "mult")

    @settings(max_examples=300, deadline=None)
    @given(st.floats(1, 50), st.floats(0, 1e4), st.integers(2, 30))
    def test_substitution(self, c, c0, n):
        eps = bound("kmeans", "add", "proof_consistent", c=c, c0=c0, n=n)
        M = comb(n, 2)
        assert c >= 1 + 2 * eps - 1e-9
        assert c0 >= M * (eps * eps + 2 * eps) - 1e-9 * (1 + c0)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(1, 50), st.floats(0, 1e4), st.integers(2, 30))
    def test_two_sided_substitution(self, c, c0, n):
        eps = bound("kmeans", "add", c=c, c0=c0, n=n)
        M = comb(n, 2)
        assert (1 + 2 * eps) ** 2 <= c * (1 + 1e-9)
        assert (2 + 2 * eps) * M * (2 * eps + eps * eps) <= c0 * (1 + 1e-9) + 1e-12

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1, 20), st.floats(0, 0.5), st.floats(0, 100), st.floats(0, 100))
    def test_monotone(self, c, dc, c0, dc0):
        for var in ("two_sided", "proof_consistent", "as_printed"):
            assert bound("kmeans", "add", var, c=c, c0=c0, n=5) <= bound("kmeans", "add", var, c=c + dc, c0=c0 + dc0, n=5) + 1e-12
            assert bound("kmeans", "mult", var, c=c) <= bound("kmeans", "mult", var, c=c + dc)

    def test_two_sided_below_proof(self):
        for c in (1.0, 2.0, 10.0):
            for fn in ("kmeans", "kmedoids", "minsum"):
                assert bound(fn, "mult", c=c) <= bound(fn, "mult", "proof_consistent", c=c)


class TestCertify:
    def test_pairs4_add(self, pairs4):
        v = certify("kmeans", pairs4, 2, PerturbSpec.add(0.1), Fraction(1, 2))
        assert v.status == "certified" and v.bound > 0.1

    def test_three_body_refuted(self):
        inst = gen_three_body("mult", 2.0)
        v = certify("kmeans", inst.d, 2, PerturbSpec.mult(2.0), Fraction(2, 3), budget=2000)
        assert v.status == "refuted" and v.witness_delta == Fraction(2, 3)

    def test_separable_linkage(self):
        d, _ = gen_separable(30, 3, 4.0, "mult", seed=0)
        v = certify("complete", d, 3, PerturbSpec.mult(1.9), Fraction(1, 10))
        assert v.status == "certified"

    def test_zero_budget(self):
        inst = gen_three_body("mult", 2.0)
        assert certify("kmeans", inst.d, 2, PerturbSpec.mult(2.0), Fraction(2, 3), budget=0).status == "unknown"

    def test_no_slack_gives_zero(self):
        d = DissimMatrix(np.ones((4, 4)) - np.eye(4))
        prof = uo_profile("kmeans", d, 2, Fraction(1, 2))
        assert best_objective_bound("kmeans", prof, "add", 4)[0] == 0.0

    def test_one_sided_unsound(self):
        # A 3-point instance where the one-sided bound certifies alpha = 1.5
        # but a legal 1.5-perturbation moves the optimum.
        d = DissimMatrix([[0, 2.6, 1.3], [2.6, 0, 2.0], [1.3, 2.0, 0]])
        spec, delta = PerturbSpec.mult(1.5), Fraction(1, 3)
        for fn in ("kmeans", "kmedoids", "minsum"):
            loose = certify(fn, d, 2, spec, delta, budget=0, variant="proof_consistent")
            assert loose.status == "certified"
            tight = certify(fn, d, 2, spec, delta, budget=5000)
            assert tight.status == "refuted"
            assert tight.witness_delta >= delta

    @settings(max_examples=25, deadline=None)
    @given(st.integers(3, 6), st.integers(0, 2**32 - 1), st.sampled_from(["kmeans", "kmedoids", "minsum", "single", "average", "complete"]),
           st.sampled_from(["mult", "add"]))
    def test_never_both(self, n, seed, fn, kind):
        d = rand_dissim(np.random.default_rng(seed), n)
        spec = PerturbSpec.of(kind, 1.05 if kind == "mult" else 0.02)
        delta = Fraction(1, 3)
        v = certify(fn, d, 2, spec, delta, budget=0)
        if v.status == "certified":
            res = adversarial_search(fn, d, 2, spec, 3000, seed)
            assert res.delta < delta
