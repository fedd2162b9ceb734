"""
MLE-based baseline agents: UCB-MNL, TS-MNL and the greedy plug-in agent.

All three refit the constrained MLE every round and track the design matrix
V_t = lambda_0 I + sum of x x^T over every offered item.
"""

from typing import Optional

import numpy as np

from estimation.mle import MleState, mle_fit
from estimation.online import leverages
from mnl.assortment import best_assortment
from mnl.linalg import PsdMatrix
from mnl.model import Assortment, ChoiceOutcome, RoundContext
from .base_agent import BaseAgent


class MleBaselineAgent(BaseAgent):
    """Shared MLE and design-matrix bookkeeping."""

    def __init__(self, agent_id: str, agent_type: str, N: int, K: int, d: int, B: float,
                 alpha_scale: float = 1.0, lambda_0: float = 1.0):
        super().__init__(agent_id, agent_type, N, K, d, B)
        self.alpha_scale = alpha_scale
        self.lambda_0 = lambda_0
        self.state = MleState.empty(d, K, B)
        self.V = PsdMatrix.identity(d, lambda_0)

    def alpha(self, t: int) -> float:
        """Exploration width alpha_0 = c sqrt(d log(t + 1))."""
        return self.alpha_scale * float(np.sqrt(self.d * np.log(t + 1.0)))

    def utilities(self, ctx: RoundContext, t: int) -> np.ndarray:
        return ctx.features @ self.state.w_hat

    def select(self, ctx: RoundContext, t: int) -> Assortment:
        S, _ = best_assortment(self.utilities(ctx, t), ctx.rewards, self.K)
        return S

    def learn(self, ctx: RoundContext, S: Assortment, outcome: ChoiceOutcome, t: int) -> None:
        X = ctx.features[list(S.items)]
        self.V = PsdMatrix(self.V.entries + X.T @ X, symmetrize=False)
        self.state.append(ctx, S, outcome)
        self.state = mle_fit(self.state)


class UcbMnlAgent(MleBaselineAgent):
    """MLE utilities plus an elliptical bonus alpha_0 ||x||_{V^{-1}}."""

    def __init__(self, agent_id: str, N: int, K: int, d: int, B: float,
                 alpha_scale: float = 1.0, lambda_0: float = 1.0):
        super().__init__(agent_id, "ucb-mnl", N, K, d, B, alpha_scale, lambda_0)

    def utilities(self, ctx: RoundContext, t: int) -> np.ndarray:
        bonus = np.sqrt(np.maximum(leverages(ctx.features, self.V), 0.0))
        return ctx.features @ self.state.w_hat + self.alpha(t) * bonus


class TsMnlAgent(MleBaselineAgent):
    """Utilities from one Gaussian draw around the MLE with covariance alpha_0^2 V^{-1}."""

    def __init__(self, agent_id: str, N: int, K: int, d: int, B: float,
                 alpha_scale: float = 1.0, lambda_0: float = 1.0,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(agent_id, "ts-mnl", N, K, d, B, alpha_scale, lambda_0)
        self.rng = rng if rng is not None else np.random.default_rng()

    def utilities(self, ctx: RoundContext, t: int) -> np.ndarray:
        sample = self.state.w_hat + self.V.sample_gaussian(self.rng, scale=self.alpha(t))
        return ctx.features @ sample


class GreedyMnlAgent(MleBaselineAgent):
    """Plug-in MLE utilities with no exploration."""

    def __init__(self, agent_id: str, N: int, K: int, d: int, B: float, lambda_0: float = 1.0):
        super().__init__(agent_id, "greedy", N, K, d, B, alpha_scale=0.0, lambda_0=lambda_0)
