"""
Restricted-space online mirror descent for the MNL loss.

Each update is one projected Newton-like step: project the iterate into the
search space, take a step under the Hessian-augmented metric, project again and
accumulate the loss Hessian at the new point.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from mnl.linalg import Ball, BallEllipsoid, Ellipsoid, PsdMatrix
from mnl.model import (
    Assortment,
    ChoiceOutcome,
    RoundContext,
    loss_gradient,
    loss_hessian,
)

SearchSpace = Union[Ball, Ellipsoid, BallEllipsoid]


@dataclass(frozen=True, eq=False)
class OmdState:
    """Online estimate w_t with its regularized Hessian sum H_t."""

    w: np.ndarray
    H: PsdMatrix
    eta: float
    lam: float
    t_updates: int = 0

    @classmethod
    def initial(cls, d: int, eta: float, lam: float) -> "OmdState":
        return cls(w=np.zeros(d), H=PsdMatrix.identity(d, lam), eta=eta, lam=lam)


def rs_omd_step(state: OmdState, search_space: SearchSpace, ctx: RoundContext, S: Assortment,
                y: ChoiceOutcome, eta: Optional[float] = None) -> OmdState:
    eta = state.eta if eta is None else eta
    w_start = search_space.project(state.w, state.H)

    # Hessian is taken at the projected point, not at the raw iterate
    H_tilde = state.H + loss_hessian(ctx, S, w_start).scaled(eta)
    gradient = loss_gradient(ctx, S, y, w_start)
    w_free = w_start - eta * H_tilde.solve(gradient)
    w_next = search_space.project(w_free, H_tilde)

    return replace(
        state,
        w=w_next,
        H=state.H + loss_hessian(ctx, S, w_next),
        t_updates=state.t_updates + 1,
    )


def leverages(features: np.ndarray, H: PsdMatrix) -> np.ndarray:
    """||x_i||^2_{H^{-1}} for every row of features."""
    solved = H.solve(features.T)
    return np.einsum("ij,ji->i", features, solved)


def warmup_criterion(ctx: RoundContext, H_w: PsdMatrix, tau: float) -> Tuple[bool, int]:
    """Whether the most uncertain item has leverage >= 1/tau^2, and that item (lowest index on ties)."""
    values = leverages(ctx.features, H_w)
    item = int(np.argmax(values))
    return bool(values[item] >= 1.0 / tau ** 2), item


def confidence_ellipsoid(state: OmdState, radius: float) -> Ellipsoid:
    return Ellipsoid(center=state.w, metric=state.H, radius=radius)


def update_condition_alpha(ctx: RoundContext, S: Assortment, E: Ellipsoid, w_star: np.ndarray) -> float:
    """sup over w in E of max_{i in S} |x_i . (w - w_star)|."""
    X = ctx.features[list(S.items)]
    offsets = np.abs(X @ (E.center - np.asarray(w_star, dtype=float)))
    widths = E.radius * np.sqrt(np.maximum(leverages(X, E.metric), 0.0))
    return float(np.max(offsets + widths))
