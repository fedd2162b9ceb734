"""
Regret accounting and instance diagnostics computed with the true parameter.
Nothing here is visible to the agents.
"""

from dataclasses import dataclass

import numpy as np

from mnl.assortment import best_assortment
from mnl.model import Assortment, RoundContext, choice_probs, expected_revenue


@dataclass(frozen=True)
class RegretDiagnostics:
    inst_regret: float
    sigma_sq: float
    kappa_star: float
    kappa_floor: float
    optimal: Assortment
    optimal_value: float


def reward_variance(ctx: RoundContext, S: Assortment, w_star: np.ndarray) -> float:
    """Variance of the realized reward of S (outside option pays 0)."""
    probs = choice_probs(ctx, S, w_star)
    rewards = np.concatenate(([0.0], ctx.rewards[list(S.items)]))
    mean = float(probs @ rewards)
    return float(probs @ (rewards - mean) ** 2)


def kappa_star(ctx: RoundContext, S: Assortment, w_star: np.ndarray) -> float:
    """sum over i in S of p(i) p(0) under the true parameter."""
    probs = choice_probs(ctx, S, w_star)
    return float(probs[1:].sum() * probs[0])


def kappa_lower_bound(ctx: RoundContext, S: Assortment, B: float) -> float:
    """Worst case of p(i) p(0) over the radius-B ball, i in S.

    Each item's utility is pushed independently to its extreme, so this is a
    lower bound rather than the attained minimum.
    """
    norms = B * np.linalg.norm(ctx.features[list(S.items)], axis=1)
    worst = np.inf
    for k in range(norms.size):
        utilities = norms.copy()
        utilities[k] = -norms[k]
        weights = np.exp(utilities)
        denominator = 1.0 + weights.sum()
        worst = min(worst, weights[k] / denominator ** 2)
    return float(worst)


def regret_and_diagnostics(ctx: RoundContext, S: Assortment, w_star: np.ndarray, K: int,
                           B: float = 1.0) -> RegretDiagnostics:
    """Instantaneous regret of S (clipped to [0, 1]) plus variance and kappa diagnostics."""
    optimal, optimal_value = best_assortment(ctx.features @ w_star, ctx.rewards, K)
    regret = optimal_value - expected_revenue(ctx, S, w_star)
    return RegretDiagnostics(
        inst_regret=float(min(max(regret, 0.0), 1.0)),
        sigma_sq=reward_variance(ctx, S, w_star),
        kappa_star=kappa_star(ctx, optimal, w_star),
        kappa_floor=kappa_lower_bound(ctx, optimal, B),
        optimal=optimal,
        optimal_value=optimal_value,
    )
