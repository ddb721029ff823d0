from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perturblab.clusterability import separability_profile
from perturblab.core import Clustering, PerturbLabError, hamming
from perturblab.functions import FUNCTIONS, get_function
from perturblab.generators import (
    cloud_target,
    gen_cloud_singletons,
    gen_euclidean_three_body,
    gen_separable,
    gen_three_body,
    sweep_cloud_singletons,
    three_body_delta,
)
from perturblab.linkage import linkage_run
from perturblab.objectives import exact_optimize

ALL = sorted(FUNCTIONS)


def condensed(d):
    D = np.asarray(d)
    return (D[0, 1], D[0, 2], D[1, 2])


class TestThreeBody:
    def test_mult(self):
        inst = gen_three_body("mult", 2.0)
        # order (ab, ac, bc)
        assert condensed(inst.d) == (2.0, 3.0, 1.0)
        assert condensed(inst.d2) == (1.0, 3.0, 2.0)
        assert inst.check()

    def test_add(self):
        inst = gen_three_body("add", 1.0)
        assert condensed(inst.d) == (1.5, 2.0, 1.0)
        assert condensed(inst.d2) == (1.0, 2.0, 1.5)
        assert inst.check()

    def test_r2_kmeans(self):
        inst = gen_three_body("mult", 2.0, 2)
        assert inst.d.n == 6
        assert exact_optimize("kmeans", inst.d, 2)[0] == inst.expected_before
        assert exact_optimize("kmeans", inst.d2, 2)[0] == inst.expected_after

    @pytest.mark.parametrize("fn", ALL)
    @pytest.mark.parametrize("r", [1, 2, 3])
    @pytest.mark.parametrize("kind,param", [("mult", 1.5), ("mult", 2.0), ("add", 0.5), ("add", 1.0)])
    def test_all_functions(self, fn, r, kind, param):
        inst = gen_three_body(kind, param, r)
        f = get_function(fn)
        assert inst.check()
        assert f(inst.d, 2) == inst.expected_before
        assert f(inst.d2, 2) == inst.expected_after
        assert hamming(inst.expected_before, inst.expected_after) == three_body_delta(r)

    def test_bad_r(self):
        with pytest.raises(PerturbLabError):
            gen_three_body("mult", 2.0, 0)


class TestSeparable:
    def test_seed7(self):
        d, C = gen_separable(12, 3, 4.0, "mult", seed=7)
        assert separability_profile(d, C).rho >= 4
        assert sorted(np.bincount(C.array())) == [4, 4, 4]

    def test_singletons(self):
        d, C = gen_separable(4, 4, 2.0, "mult", seed=0)
        assert separability_profile(d, C).rho == float("inf")

    def test_margin(self):
        d, C = gen_separable(12, 3, 0.5, "add", seed=1)
        assert separability_profile(d, C).margin >= 0.5

    def test_deterministic(self):
        a = gen_separable(10, 2, 3.0, seed=5)
        b = gen_separable(10, 2, 3.0, seed=5)
        assert np.array_equal(np.asarray(a[0]), np.asarray(b[0])) and a[1] == b[1]

    @pytest.mark.parametrize("args", [(3, 4, 2.0, "mult"), (5, 2, 1.0, "mult"), (5, 2, 0.0, "add")])
    def test_infeasible(self, args):
        with pytest.raises(PerturbLabError):
            gen_separable(*args)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 40), st.integers(1, 5), st.floats(1.01, 10), st.integers(0, 2**32 - 1))
    def test_linkage_recovers(self, n, k, rho, seed):
        k = min(k, n)
        d, C = gen_separable(n, k, rho, "mult", seed)
        for m in ("single", "average", "complete"):
            assert linkage_run(m, d, k)[0] == C


class TestCloud:
    def test_target(self):
        assert cloud_target(2, 8) == Fraction(4, 7)

    def test_example(self):
        rep = gen_cloud_singletons(2, 2, 0.5, 1.0, 1.0, 2.0)
        inst = rep.instance
        assert inst.d.n == 9 and inst.check()
        iu = np.triu_indices(9, 1)
        ratios = set(np.round(np.asarray(inst.d2)[iu] / np.asarray(inst.d)[iu], 12).tolist())
        assert ratios <= {1.0, 1.5, round(1 / 1.5, 12)}
        assert rep.delta_full == hamming(rep.out_before, rep.out_after)

    def test_degenerate(self):
        rep = gen_cloud_singletons(2, 2, 0.0, 1.0, 1.0, 2.0)
        assert np.array_equal(np.asarray(rep.instance.d), np.asarray(rep.instance.d2))
        assert rep.delta_full == 0 and not rep.feasible

    def test_alpha_too_small(self):
        rep = gen_cloud_singletons(2, 2, 0.5, 1.0, 1.0, 1.2)
        assert not rep.feasible and rep.instance is None and "exceeds" in rep.reason

    def test_sweep(self):
        rep, allreps = sweep_cloud_singletons()
        assert rep is not None and rep.delta_cloud >= Fraction(4, 7)
        assert rep.instance.check()
        assert rep.delta_cloud == Fraction(4, 7) and rep.delta_full == Fraction(5, 9)
        assert all(not r.feasible for r in allreps[:-1])


class TestEuclidean:
    def test_add_dim1(self):
        rep = gen_euclidean_three_body(1, 0.01, "add", 0.25)
        assert rep.valid
        D, D2 = np.asarray(rep.instance.d), np.asarray(rep.instance.d2)
        assert np.allclose([D[0, 1], D[1, 2], D[0, 2]], [1.01, 1.0, 2.01])
        assert np.allclose([D2[0, 1], D2[1, 2], D2[0, 2]], [0.76, 1.25, 2.01])

    @pytest.mark.parametrize("fn", ALL)
    @pytest.mark.parametrize("dim", [1, 3])
    @pytest.mark.parametrize("kind,param", [("add", 0.25), ("mult", 2.0)])
    def test_outputs(self, fn, dim, kind, param):
        rep = gen_euclidean_three_body(dim, 0.01, kind, param)
        assert rep.valid
        f = get_function(fn)
        assert f(rep.instance.d, 2) == Clustering((0, 1, 1))
        assert f(rep.instance.d2, 2) == Clustering((0, 0, 1))

    def test_as_printed_invalid(self):
        assert not gen_euclidean_three_body(1, 0.01, "mult", 2.0, placement="as_printed").valid
        rep = gen_euclidean_three_body(3, 0.01, "add", 0.25, placement="as_printed")
        assert not rep.valid and rep.worst_pair is not None
        assert gen_euclidean_three_body(1, 0.01, "add", 0.25, placement="as_printed").valid

    def test_replicated(self):
        rep = gen_euclidean_three_body(2, 0.01, "mult", 2.0, r=2)
        assert rep.instance.d.n == 6 and rep.valid
