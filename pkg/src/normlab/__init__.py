"""Discretization of L_p norms on step-function subspaces."""

__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, InternalInconsistency, InvalidArgument, InvalidSamplingSet,
                     InvalidSubspace, NormlabError, ResourceBoundError)
from .scalar import ScaledRational
from .stepfn import (PartitionSpace, StepFunction, Subspace, common_refinement, evaluate, linear_combination,
                     linf_norm, lp_norm, lp_norm_pth_power, make_uniform_partition)
from .constructions import (infinite_truncation, khintchine_empirical_constants, khintchine_expectation,
                            khintchine_moment, l1_basis, l1_perturbation_bound, rademacher, rademacher_subspace,
                            rademacher_system)
from .nikolskii import nikolskii_constant, nikolskii_ratio
from .discretize import (SamplingSet, disc_constants, disc_constants_p1_exact, disc_constants_p2,
                         disc_constants_search, empirical_p_sum, l1_adversarial_witness, l1_valid_sampling,
                         p_gt_2_beta_check, rademacher_nikolskii_bound, rademacher_sampling_bound, random_sampling,
                         uniform_sampling, validity_check)
from .frames import (FiniteFrame, PartitionFrame, analysis, complement_property, frame_bounds, mercedes_frame,
                     parseval_normalize, pr_stability_bounds, sample_partition_frame, subspace_frame_correspondence,
                     verify_pr_discretization_theorem, verify_stabpr_lemma)

__all__ = [
    "__version__", "ConfigError", "DomainError", "FiniteFrame", "InternalInconsistency", "InvalidArgument",
    "InvalidSamplingSet", "InvalidSubspace", "NormlabError", "PartitionFrame", "PartitionSpace",
    "ResourceBoundError", "SamplingSet", "ScaledRational", "StepFunction", "Subspace", "analysis",
    "common_refinement", "complement_property", "disc_constants", "disc_constants_p1_exact", "disc_constants_p2",
    "disc_constants_search", "empirical_p_sum", "evaluate", "frame_bounds", "infinite_truncation",
    "khintchine_empirical_constants", "khintchine_expectation", "khintchine_moment", "l1_adversarial_witness",
    "l1_basis", "l1_perturbation_bound", "l1_valid_sampling", "linear_combination", "linf_norm", "lp_norm",
    "lp_norm_pth_power", "make_uniform_partition", "mercedes_frame", "nikolskii_constant", "nikolskii_ratio",
    "p_gt_2_beta_check", "parseval_normalize", "pr_stability_bounds", "rademacher", "rademacher_nikolskii_bound",
    "rademacher_sampling_bound", "rademacher_subspace", "rademacher_system", "random_sampling",
    "sample_partition_frame", "subspace_frame_correspondence", "uniform_sampling", "validity_check",
    "verify_pr_discretization_theorem", "verify_stabpr_lemma",
]
