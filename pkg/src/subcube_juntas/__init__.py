"""Learning and testing junta distributions with subcube conditional samples."""

from .config import AlgoConfig, split_rng
from .distributions import (
    ExplicitDist,
    JuntaDist,
    ProductDist,
    ZeroMassError,
    empirical_mean,
    load_instance,
    dump_instance,
    mean_vector,
    project_exact,
    relevant_coordinates,
    restrict_exact,
    tv_distance,
    uniform,
)
from .exact import (
    canonical_junta_distance,
    closest_junta_distance,
    distance_to_k_junta,
    product_tv_lower_bound,
    sigma_monotonicity_check,
    structural_audit,
)
from .finder import find_relevant_variables, learn_junta, variables_budget
from .hard_instances import (
    build_gadget,
    moment_check,
    parity_instance,
    pmf_instance_from_boolean,
    sample_dno,
    sample_dyes,
)
from .junta_tester import make_test_plan, test_junta
from .mean_tester import Verdict, gram_matrix, make_plan, robust_mean_test, z_statistic
from .oracle import CondOracle
from .restrictions import (
    Restriction,
    StarSubsetLaw,
    sample_restriction_DS,
    sample_restriction_Dsigma,
    sample_subset,
)
from .compression import QueryTree, compression_audit, execute_tree, sample_walk, almost_uniform_check

__version__ = "0.1.0"

__all__ = [
    "find_relevant_variables",
    "learn_junta",
    "variables_budget",
    "make_test_plan",
    "test_junta",
    "Verdict",
    "gram_matrix",
    "make_plan",
    "robust_mean_test",
    "z_statistic",
    "CondOracle",
    "AlgoConfig",
    "ExplicitDist",
    "JuntaDist",
    "ProductDist",
    "QueryTree",
    "Restriction",
    "StarSubsetLaw",
    "ZeroMassError",
    "almost_uniform_check",
    "build_gadget",
    "canonical_junta_distance",
    "closest_junta_distance",
    "compression_audit",
    "distance_to_k_junta",
    "dump_instance",
    "empirical_mean",
    "execute_tree",
    "load_instance",
    "mean_vector",
    "moment_check",
    "parity_instance",
    "pmf_instance_from_boolean",
    "product_tv_lower_bound",
    "project_exact",
    "relevant_coordinates",
    "restrict_exact",
    "sample_dno",
    "sample_dyes",
    "sample_restriction_DS",
    "sample_restriction_Dsigma",
    "sample_subset",
    "sample_walk",
    "sigma_monotonicity_check",
    "split_rng",
    "structural_audit",
    "tv_distance",
    "uniform",
]
