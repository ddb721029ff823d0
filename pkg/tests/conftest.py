import numpy as np
import pytest

from perturblab.core import DissimMatrix


def rand_dissim(rng, n, lo=0.1, hi=10.0):
    a = rng.uniform(lo, hi, size=(n, n))
    a = np.triu(a, 1)
    return DissimMatrix(a + a.T)


@pytest.fixture
def pairs4():
    return DissimMatrix([[0, 1, 10, 10], [1, 0, 10, 10], [10, 10, 0, 1], [10, 10, 1, 0]])


@pytest.fixture
def tri123():
    # point order a, b, c with d(b,c)=1, d(a,b)=2, d(a,c)=3
    return DissimMatrix([[0, 2, 3], [2, 0, 1], [3, 1, 0]])
