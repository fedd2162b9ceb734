"""
Step sizes, regularizers and confidence radii for the online and MLE estimators.
All logarithms are natural.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from exceptions import InvalidInputError

SQRT2 = np.sqrt(2.0)
SQRT6 = np.sqrt(6.0)


@dataclass(frozen=True)
class HyperParams:
    """Constants of the OFU-MNL++ estimators for a (d, B, delta) problem."""

    d: int
    B: float
    delta: float
    eta: float
    eta_w: float
    lam: float
    lam_w: float
    tau_multiplier: float = 1.0
    tau_override: Optional[float] = None  # constant threshold replacing tau_t
    radius_multiplier: float = 1.0  # scales beta_t in the optimistic utilities

    @classmethod
    def from_problem(cls, d: int, B: float, delta: float,
                     tau_multiplier: float = 1.0,
                     tau_override: Optional[float] = None,
                     radius_multiplier: float = 1.0,
                     regularizer_multiplier: float = 1.0) -> "HyperParams":
        if d < 1 or not B > 0 or not 0.0 < delta <= 1.0:
            raise InvalidInputError(f"invalid problem constants d={d}, B={B}, delta={delta}")
        if not regularizer_multiplier > 0:
            raise InvalidInputError(f"regularizer multiplier must be positive, got {regularizer_multiplier}")
        eta = 1.0
        eta_w = 0.5 + 3.0 * SQRT2 * B
        lam = 144.0 * d
        lam_w = max(12.0 * SQRT2 * eta_w * B, 144.0 * eta_w * d, 2.0)
        return cls(
            d=d,
            B=B,
            delta=delta,
            eta=eta,
            eta_w=eta_w,
            lam=regularizer_multiplier * lam,
            lam_w=regularizer_multiplier * lam_w,
            tau_multiplier=tau_multiplier,
            tau_override=tau_override,
            radius_multiplier=radius_multiplier,
        )


def _radius(t: int, eta: float, lam: float, hp: HyperParams) -> float:
    if t < 1:
        raise InvalidInputError(f"round index must be >= 1, got {t}")
    return float(np.sqrt(
        2.0 * eta * np.log(1.0 / hp.delta)
        + 4.0 * SQRT6 * eta ** 2 * hp.d * np.log(t + 2.0)
        + 4.0 * hp.B ** 2 * lam
    ))


def zeta_radius(t: int, hp: HyperParams) -> float:
    """Radius of the warm-up confidence set after t rounds."""
    return _radius(t, hp.eta_w, hp.lam_w, hp)


def beta_radius(t: int, hp: HyperParams) -> float:
    """Radius of the planning confidence set after t rounds."""
    return _radius(t, hp.eta, hp.lam, hp)


def tau_threshold(t: int, hp: HyperParams) -> float:
    if hp.tau_override is not None:
        return float(hp.tau_override)
    return hp.tau_multiplier * 6.0 * SQRT2 * zeta_radius(t, hp)


def mle_radius_sq(t: int, B: float, d: int, delta: float) -> float:
    """Squared likelihood-ratio radius gamma_t(delta)^2 of the MLE confidence set."""
    if t < 1:
        raise InvalidInputError(f"round index must be >= 1, got {t}")
    return float(np.log(1.0 / delta) + d * np.log(max(np.e, 4.0 * np.e * B * (t - 1) / d)))
