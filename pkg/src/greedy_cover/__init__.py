"""Greedy coverings of compact metric spaces with dual certificates."""

from greedy_cover.bounds import (
    bounds_report,
    bw_ratio_check,
    corollary_density_bound,
    naszodi_bound,
    optimal_mu,
    theorem1_bounds,
)
from greedy_cover.empirical import EmpiricalMeasure, ball_indices, build_cloud, load_cloud, save_cloud
from greedy_cover.errors import (
    ConfigError,
    DomainError,
    InfeasibleDiscretization,
    UnsupportedOperation,
    ValidationError,
)
from greedy_cover.greedy import (
    CoveringRun,
    DualCertificate,
    build_certificate,
    check_certificate,
    greedy_cover,
    termination_bound_check,
)
from greedy_cover.report import RunConfig, density_curve, run_cover, verify_covering
from greedy_cover.shapes import ShapePair, UnionOfBalls, greedy_shape_cover, shape_membership, validate_shape_pair
from greedy_cover.spaces import Space, ball_measure, distance, sample, validate_finite_space

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CoveringRun",
    "DomainError",
    "DualCertificate",
    "EmpiricalMeasure",
    "InfeasibleDiscretization",
    "RunConfig",
    "ShapePair",
    "Space",
    "UnionOfBalls",
    "UnsupportedOperation",
    "ValidationError",
    "ball_indices",
    "ball_measure",
    "bounds_report",
    "build_certificate",
    "build_cloud",
    "bw_ratio_check",
    "check_certificate",
    "corollary_density_bound",
    "density_curve",
    "distance",
    "greedy_cover",
    "greedy_shape_cover",
    "load_cloud",
    "naszodi_bound",
    "optimal_mu",
    "run_cover",
    "sample",
    "save_cloud",
    "shape_membership",
    "termination_bound_check",
    "theorem1_bounds",
    "validate_finite_space",
    "validate_shape_pair",
    "verify_covering",
]
