"""The compiled kernels must agree bit for bit with the numpy fallback."""

import numpy as np
import pytest

from perturblab import kernels
from perturblab.core import partition_table

py = kernels.python_backend
cy = kernels.compiled_backend
pytestmark = pytest.mark.skipif(cy is None, reason="compiled backend not built")


def rand(n, seed):
    rng = np.random.default_rng(seed)
    a = np.triu(rng.uniform(0, 5, (n, n)), 1)
    return a + a.T


def test_backend_selected():
    assert kernels.BACKEND == "cython"


@pytest.mark.parametrize("n", [1, 2, 5, 8, 10])
@pytest.mark.parametrize("obj", [0, 1, 2])
def test_subset_costs(n, obj):
    d = rand(n, n)
    assert np.array_equal(py.subset_costs(d, obj), cy.subset_costs(d, obj))


@pytest.mark.parametrize("n,k", [(5, 2), (7, 3), (9, 4)])
@pytest.mark.parametrize("obj", [0, 1, 2])
def test_argmin_and_batch(n, k, obj):
    _, masks = partition_table(n, k)
    stack = np.stack([rand(n, s) for s in range(20)])
    a = py.ExactArgmin(n, obj, masks, 1e-9)
    b = cy.ExactArgmin(n, obj, masks, 1e-9)
    assert np.array_equal(a.batch(stack), b.batch(stack))
    for m in stack[:5]:
        assert a(m) == b(m)
        sc = py.subset_costs(m, obj)
        assert np.array_equal(py.partition_costs(sc, masks), cy.partition_costs(sc, masks))


@pytest.mark.parametrize("n,k", [(6, 2), (10, 3)])
def test_disagreement_counts(n, k):
    _, masks = partition_table(n, k)
    ref = masks[len(masks) // 3]
    assert np.array_equal(py.disagreement_counts(masks, ref), cy.disagreement_counts(masks, ref))


@pytest.mark.parametrize("method", [0, 1, 2])
@pytest.mark.parametrize("n,k", [(2, 1), (7, 1), (12, 3), (40, 5)])
def test_linkage(method, n, k):
    d = rand(n, 100 + n)
    for x, y in zip(py.linkage(d, k, method), cy.linkage(d, k, method)):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("method", [0, 1, 2])
def test_linkage_ties(method):
    d = np.ones((6, 6)) - np.eye(6)
    for x, y in zip(py.linkage(d, 2, method), cy.linkage(d, 2, method)):
        assert np.array_equal(x, y)
