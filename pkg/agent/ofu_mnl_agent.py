"""
Optimistic agents driven by the online mirror-descent estimator.

OfuMnlPlusPlusAgent runs two estimators. An adaptive warm-up estimator is
updated only on rounds where some item is still poorly explored, and its
confidence ellipsoid becomes the search space of the planning estimator.
OfuMnlPlusAgent keeps a single full-ball estimator updated every round.
"""

from typing import Optional

import numpy as np

from estimation.online import (
    OmdState,
    confidence_ellipsoid,
    leverages,
    rs_omd_step,
    warmup_criterion,
)
from estimation.radii import HyperParams, beta_radius, tau_threshold, zeta_radius
from mnl.assortment import best_assortment
from mnl.linalg import Ball, BallEllipsoid, Ellipsoid
from mnl.model import Assortment, ChoiceOutcome, RoundContext
from .base_agent import BaseAgent, PLANNING, WARMUP


def optimistic_utilities(features: np.ndarray, state: OmdState, radius: float) -> np.ndarray:
    """x_i . w + radius ||x_i||_{H^{-1}}"""
    bonus = np.sqrt(np.maximum(leverages(features, state.H), 0.0))
    return features @ state.w + radius * bonus


class OfuMnlPlusPlusAgent(BaseAgent):
    """Optimistic agent with adaptive warm-up and restricted-space online updates."""

    def __init__(self, agent_id: str, N: int, K: int, d: int, B: float, delta: float,
                 tau_multiplier: float = 1.0, tau_override: Optional[float] = None,
                 radius_multiplier: float = 1.0, regularizer_multiplier: float = 1.0):
        super().__init__(agent_id, "ofu-mnl++", N, K, d, B)
        # both confidence families must hold at once, so each gets half the failure budget
        self.hp = HyperParams.from_problem(
            d, B, delta / 2.0,
            tau_multiplier=tau_multiplier,
            tau_override=tau_override,
            radius_multiplier=radius_multiplier,
            regularizer_multiplier=regularizer_multiplier,
        )
        self.warmup_state = OmdState.initial(d, self.hp.eta_w, self.hp.lam_w)
        self.state = OmdState.initial(d, self.hp.eta, self.hp.lam)
        self.ball = Ball(B)
        self.warmup_set: Optional[Ellipsoid] = None
        self.last_beta = 0.0

        self.logger.info(
            f"Agent {agent_id} initialized: eta_w={self.hp.eta_w:.4g} lambda={self.hp.lam:.4g} "
            f"lambda_w={self.hp.lam_w:.4g} tau_1={tau_threshold(1, self.hp):.4g}"
        )

    @property
    def search_space(self) -> Optional[Ellipsoid]:
        return self.warmup_set

    def _planning_space(self):
        if self.warmup_set is None:
            return self.ball
        return BallEllipsoid(self.warmup_set, self.B)

    def select(self, ctx: RoundContext, t: int) -> Assortment:
        triggered, item = warmup_criterion(ctx, self.warmup_state.H, tau_threshold(t, self.hp))
        if triggered:
            self.last_phase = WARMUP
            return Assortment((item,))

        self.last_phase = PLANNING
        self.last_beta = self.hp.radius_multiplier * beta_radius(t, self.hp)
        utilities = optimistic_utilities(ctx.features, self.state, self.last_beta)
        S, _ = best_assortment(utilities, ctx.rewards, self.K)
        return S

    def learn(self, ctx: RoundContext, S: Assortment, outcome: ChoiceOutcome, t: int) -> None:
        if self.last_phase == WARMUP:
            self.warmup_state = rs_omd_step(self.warmup_state, self.ball, ctx, S, outcome, self.hp.eta_w)
            self.warmup_set = confidence_ellipsoid(self.warmup_state, zeta_radius(t + 1, self.hp))
        else:
            self.state = rs_omd_step(self.state, self._planning_space(), ctx, S, outcome, self.hp.eta)


class OfuMnlPlusAgent(BaseAgent):
    """Optimistic agent with one full-ball online estimator updated every round."""

    def __init__(self, agent_id: str, N: int, K: int, d: int, B: float, delta: float,
                 radius_multiplier: float = 1.0, regularizer_multiplier: float = 1.0):
        super().__init__(agent_id, "ofu-mnl+", N, K, d, B)
        self.hp = HyperParams.from_problem(
            d, B, delta,
            radius_multiplier=radius_multiplier,
            regularizer_multiplier=regularizer_multiplier,
        )
        self.state = OmdState.initial(d, self.hp.eta_w, self.hp.lam_w)
        self.ball = Ball(B)

    def select(self, ctx: RoundContext, t: int) -> Assortment:
        radius = self.hp.radius_multiplier * zeta_radius(t, self.hp)
        S, _ = best_assortment(optimistic_utilities(ctx.features, self.state, radius), ctx.rewards, self.K)
        return S

    def learn(self, ctx: RoundContext, S: Assortment, outcome: ChoiceOutcome, t: int) -> None:
        self.state = rs_omd_step(self.state, self.ball, ctx, S, outcome, self.hp.eta_w)
