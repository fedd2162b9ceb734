"""
Revenue-maximizing assortments under the MNL model.

Both optimizers take item utilities (not probabilities) and rewards and return
an (Assortment, value) pair where value = sum v_i r_i / (1 + sum v_i) over the
chosen set with v_i = exp(utility_i).
"""

from itertools import combinations
from typing import Tuple

import numpy as np

from config import settings
from exceptions import InvalidInputError
from .model import Assortment

# exp() overflows past ~709
UTILITY_CLIP = 700.0


def _weights(utilities: np.ndarray) -> np.ndarray:
    return np.exp(np.clip(utilities, -UTILITY_CLIP, UTILITY_CLIP))


def _check_inputs(utilities: np.ndarray, rewards: np.ndarray, K: int) -> Tuple[np.ndarray, np.ndarray]:
    utilities = np.asarray(utilities, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    if utilities.ndim != 1 or utilities.size == 0:
        raise InvalidInputError(f"utilities must be a nonempty vector, got shape {utilities.shape}")
    if rewards.shape != utilities.shape:
        raise InvalidInputError(f"rewards shape {rewards.shape} does not match utilities shape {utilities.shape}")
    if K < 1:
        raise InvalidInputError(f"assortment capacity must be at least 1, got {K}")
    return utilities, rewards


def revenue(weights: np.ndarray, rewards: np.ndarray, items) -> float:
    idx = list(items)
    return float(weights[idx] @ rewards[idx] / (1.0 + weights[idx].sum()))


def brute_force_best(utilities: np.ndarray, rewards: np.ndarray, K: int) -> Tuple[Assortment, float]:
    """Exhaustive search over every nonempty set of at most K items.

    Ties within the assortment tolerance go to the lexicographically smallest item tuple.
    """
    utilities, rewards = _check_inputs(utilities, rewards, K)
    N = utilities.size
    if N > settings.BRUTE_FORCE_MAX_ITEMS:
        raise InvalidInputError(f"brute force is limited to N <= {settings.BRUTE_FORCE_MAX_ITEMS}, got N={N}")

    weights = _weights(utilities)
    scored = [
        (revenue(weights, rewards, items), items)
        for size in range(1, min(K, N) + 1)
        for items in combinations(range(N), size)
    ]
    best_value = max(value for value, _ in scored)
    winner = min(items for value, items in scored if value >= best_value - settings.ASSORTMENT_TOL)
    return Assortment(winner), revenue(weights, rewards, winner)


def _top_positive(scores: np.ndarray, K: int) -> np.ndarray:
    # stable sort keeps the lower index first among equal scores
    order = np.argsort(-scores, kind="stable")[:K]
    return order[scores[order] > 0]


def best_assortment(utilities: np.ndarray, rewards: np.ndarray, K: int) -> Tuple[Assortment, float]:
    """Parametric search on the revenue level theta.

    theta is achievable iff the up-to-K items with the largest positive
    v_i (r_i - theta) have scores summing to at least theta.
    """
    utilities, rewards = _check_inputs(utilities, rewards, K)
    r_max = float(rewards.max())
    if r_max <= 0.0:
        return Assortment((0,)), 0.0

    weights = _weights(utilities)
    lo, hi = 0.0, r_max
    while hi - lo > settings.ASSORTMENT_TOL:
        theta = 0.5 * (lo + hi)
        scores = weights * (rewards - theta)
        if scores[_top_positive(scores, K)].sum() >= theta:
            lo = theta
        else:
            hi = theta

    chosen = _top_positive(weights * (rewards - lo), K)
    if chosen.size == 0:
        chosen = np.array([int(np.argmax(rewards))])
    value = revenue(weights, rewards, chosen)

    # items whose reward equals the optimal revenue can be added or dropped freely
    shift = np.abs(weights * (rewards - value)) / (1.0 + weights[chosen].sum() + weights)
    free = shift <= settings.ASSORTMENT_TOL
    required = sorted(int(i) for i in chosen if not free[i])
    items = _smallest_completion(required, np.flatnonzero(free), K)
    if not items or revenue(weights, rewards, items) < value - settings.ASSORTMENT_TOL:
        items = tuple(sorted(int(i) for i in chosen))
    return Assortment(items), revenue(weights, rewards, items)


def _smallest_completion(required, free, K: int) -> Tuple[int, ...]:
    """Lexicographically smallest sorted tuple holding every required item plus free items, size <= K."""
    if not required:
        return (int(free[0]),) if len(free) else ()
    spare = K - len(required)
    items = []
    for i in sorted(set(required) | {int(j) for j in free}):
        if i in required:
            items.append(i)
        elif spare > 0 and i < required[-1]:
            items.append(i)
            spare -= 1
    return tuple(items)
