"""
Optimistic agent over the likelihood-ratio confidence set of the constrained MLE.
The MLE is refit over the full history every round, so per-round cost grows with t.
"""

import numpy as np

from estimation.mle import MleState, mle_fit, mle_optimistic_utility
from estimation.radii import mle_radius_sq
from mnl.assortment import best_assortment
from mnl.model import Assortment, ChoiceOutcome, RoundContext
from .base_agent import BaseAgent


class OfuMleMnlAgent(BaseAgent):
    """Offers the revenue-optimal assortment under per-item optimistic MLE utilities."""

    def __init__(self, agent_id: str, N: int, K: int, d: int, B: float, delta: float):
        super().__init__(agent_id, "ofu-mle-mnl", N, K, d, B)
        self.delta = delta
        self.state = MleState.empty(d, K, B)
        self.last_gamma_sq = 0.0

    def optimistic_utilities(self, ctx: RoundContext, t: int) -> np.ndarray:
        self.last_gamma_sq = mle_radius_sq(t, self.B, self.d, self.delta)
        return np.array([
            mle_optimistic_utility(self.state, x, self.last_gamma_sq)
            for x in ctx.features
        ])

    def select(self, ctx: RoundContext, t: int) -> Assortment:
        S, _ = best_assortment(self.optimistic_utilities(ctx, t), ctx.rewards, self.K)
        return S

    def learn(self, ctx: RoundContext, S: Assortment, outcome: ChoiceOutcome, t: int) -> None:
        self.state.append(ctx, S, outcome)
        self.state = mle_fit(self.state)
