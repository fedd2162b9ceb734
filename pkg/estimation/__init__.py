"""
Parameter estimation: online mirror descent, confidence radii and the constrained MLE.
"""

from .radii import HyperParams, zeta_radius, beta_radius, tau_threshold, mle_radius_sq
from .online import OmdState, rs_omd_step, warmup_criterion, confidence_ellipsoid, update_condition_alpha
from .mle import MleState, mle_fit, mle_optimistic_utility

__all__ = [
    "HyperParams",
    "zeta_radius",
    "beta_radius",
    "tau_threshold",
    "mle_radius_sq",
    "OmdState",
    "rs_omd_step",
    "warmup_criterion",
    "confidence_ellipsoid",
    "update_condition_alpha",
    "MleState",
    "mle_fit",
    "mle_optimistic_utility"
]
