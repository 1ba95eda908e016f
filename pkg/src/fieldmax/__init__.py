"""fieldmax: joint limit laws for maxima of 2D random fields with missing data.

The package simulates stationary Gaussian random fields (and their chi and
order-statistics transforms) on rectangles, applies random-rate missing
observation masks, calibrates exceedance levels, estimates joint laws of the
complete and incomplete maxima by Monte Carlo, evaluates the limiting mixture
law E[exp(-lambda*kappa) exp(-(1-lambda)*tau)] analytically, and computes
numeric surrogates for the dependence conditions underpinning the limit
theorems.
"""

__version__ = "0.1.0"

from .covgrid import (
    CovarianceModel,
    GridShape,
    berman_check,
    build_covariance_matrix,
    covariance_at,
)
from .diagnostics import (
    bvn_upper_orthant,
    comparison_bound,
    dprime_sum,
    dstar_bound,
    make_partition,
    tail_comparability,
)
from .estimators import (
    EstimateReport,
    JointConfig,
    PrefixMaxPair,
    asclt_estimate,
    asclt_from_field,
    asclt_trace,
    exact_iid_joint,
    joint_event,
    level_grids,
    mc_joint_probability,
    prefix_max,
    weight_normalizer,
)
from .fieldgen import (
    FieldSample,
    TrendSpec,
    apply_trend,
    sample_chi_field,
    sample_gaussian_field,
    sample_orderstat_field,
    solve_center,
    validate_trend,
)
from .levels import (
    LevelPlan,
    TailFunction,
    calibrate_level,
    gumbel_joint_limit,
    gumbel_level,
    limit_value,
    make_plan,
    normalizing_constants,
    tail,
)
from .missing import (
    LambdaModel,
    MissingMask,
    empirical_lambda,
    observed_transform,
    sample_lambda,
    sample_mask,
)
from .streams import derive_stream

__all__ = [
    "__version__",
    "CovarianceModel",
    "GridShape",
    "berman_check",
    "build_covariance_matrix",
    "covariance_at",
    "bvn_upper_orthant",
    "comparison_bound",
    "dprime_sum",
    "dstar_bound",
    "make_partition",
    "tail_comparability",
    "EstimateReport",
    "JointConfig",
    "PrefixMaxPair",
    "asclt_estimate",
    "asclt_from_field",
    "asclt_trace",
    "exact_iid_joint",
    "joint_event",
    "level_grids",
    "mc_joint_probability",
    "prefix_max",
    "weight_normalizer",
    "FieldSample",
    "TrendSpec",
    "apply_trend",
    "sample_chi_field",
    "sample_gaussian_field",
    "sample_orderstat_field",
    "solve_center",
    "validate_trend",
    "LevelPlan",
    "TailFunction",
    "calibrate_level",
    "gumbel_joint_limit",
    "gumbel_level",
    "limit_value",
    "make_plan",
    "normalizing_constants",
    "tail",
    "LambdaModel",
    "MissingMask",
    "empirical_lambda",
    "observed_transform",
    "sample_lambda",
    "sample_mask",
    "derive_stream",
]
