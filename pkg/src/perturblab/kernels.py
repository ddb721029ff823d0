"""Backend selection for the hot kernels.

The compiled module is used when it imports; set ``PERTURBLAB_PURE_PYTHON=1``
to force the numpy fallback.  Both expose the same functions.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("PERTURBLAB_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # pragma: no cover - depends on build
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

KMEANS, KMEDOIDS, MINSUM = 0, 1, 2
SINGLE, AVERAGE, COMPLETE = 0, 1, 2


def exact_evaluator(n, obj, masks, rtol):
    """Callable ``d -> (index, cost)`` with a ``batch`` method for stacks of matrices."""
    return backend.ExactArgmin(n, obj, masks, rtol)


def subset_costs(d, obj):
    return backend.subset_costs(d, obj)


def partition_costs(sc, masks):
    return backend.partition_costs(sc, masks)


def best_index(sc, masks, rtol):
    return backend.best_index(sc, masks, rtol)


def disagreement_counts(masks, ref):
    return backend.disagreement_counts(masks, ref)


def linkage(d, k, method):
    return backend.linkage(d, k, method)
