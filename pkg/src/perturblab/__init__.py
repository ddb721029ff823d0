"""Exact clustering under perturbations of the dissimilarity table."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CapExceededError,
    Clustering,
    DissimMatrix,
    MergeTrace,
    PerturbLabError,
    enumerate_k_partitions,
    hamming,
    is_refinement,
    replicate,
    set_enumeration_cap,
    stirling2,
    validate_dissim,
)
from .kernels import BACKEND  # noqa: E402
from .objectives import Objective, cost, exact_optimize  # noqa: E402
from .linkage import LinkageMethod, linkage_run  # noqa: E402
from .functions import FUNCTIONS, get_function  # noqa: E402
from .perturb import PerturbSpec, adversarial_search, is_valid_perturbation, sample_perturbation  # noqa: E402
from .clusterability import (  # noqa: E402
    SeparabilityProfile,
    UOProfile,
    find_separable_clustering,
    separability_profile,
    uo_profile,
)
from .bounds import BoundFormula, RobustnessVerdict, certify, robust_bound  # noqa: E402
from .axioms import (  # noqa: E402
    AxiomReport,
    check_replication_invariance,
    check_three_body,
    impossibility_demo,
    perturbation_chain,
    richness_witness,
)
from .generators import (  # noqa: E402
    PairedInstance,
    gen_cloud_singletons,
    gen_euclidean_three_body,
    gen_separable,
    gen_three_body,
)
