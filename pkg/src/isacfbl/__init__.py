"""Finite-blocklength rate-error bounds for integrated sensing and communication."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .bounds import (
    BoundsReport,
    CapacityBaseline,
    CodeParams,
    NormalApproxBaseline,
    SystemParams,
    achievability_rate,
    asymptotic_limits,
    converse_sandwich,
    d_m,
    delta_budget,
    evaluate_bounds,
    mse_upper_bound,
    r_epsilon,
)
from .capgeom import CapSpec, bias_to_angle, cap_area_ratio, maximal_bias, sample_cap, sample_sphere
from .linksim import McConfig, McReport, build_cap_codebook, run_campaign

__all__ = [
    "BACKEND",
    "BoundsReport",
    "CapSpec",
    "CapacityBaseline",
    "CodeParams",
    "McConfig",
    "McReport",
    "NormalApproxBaseline",
    "SystemParams",
    "achievability_rate",
    "asymptotic_limits",
    "bias_to_angle",
    "build_cap_codebook",
    "cap_area_ratio",
    "converse_sandwich",
    "d_m",
    "delta_budget",
    "evaluate_bounds",
    "maximal_bias",
    "mse_upper_bound",
    "r_epsilon",
    "run_campaign",
    "sample_cap",
    "sample_sphere",
]
