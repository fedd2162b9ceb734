"""
MNL choice model package.
Contains the choice model, PSD linear algebra and assortment optimization.
"""

from .linalg import PsdMatrix, Ball, Ellipsoid, BallEllipsoid, accumulate, mahalanobis, inv_mahalanobis
from .model import RoundContext, MnlParameter, Assortment, ChoiceOutcome
from .assortment import best_assortment, brute_force_best

__all__ = [
    "PsdMatrix",
    "Ball",
    "Ellipsoid",
    "BallEllipsoid",
    "accumulate",
    "mahalanobis",
    "inv_mahalanobis",
    "RoundContext",
    "MnlParameter",
    "Assortment",
    "ChoiceOutcome",
    "best_assortment",
    "brute_force_best"
]
