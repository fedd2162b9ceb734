"""
Tests for revenue-maximizing assortment selection.
"""

import numpy as np
import pytest

from exceptions import InvalidInputError
from mnl.assortment import best_assortment, brute_force_best, revenue
from mnl.linalg import sample_unit_ball
from mnl.model import Assortment, RoundContext, expected_revenue


def test_popular_low_reward_item_is_left_out():
    """A cheap item that steals demand from the valuable one is not offered"""
    utilities, rewards = np.array([0.0, 3.0]), np.array([1.0, 0.1])
    S, value = best_assortment(utilities, rewards, K=2)
    assert S == Assortment((0,))
    assert value == pytest.approx(0.5, abs=1e-12)


def test_equal_rewards_pick_the_top_utilities(rng):
    utilities = rng.normal(size=8)
    rewards = np.full(8, 0.5)
    S, value = best_assortment(utilities, rewards, K=3)
    top = tuple(sorted(np.argsort(-utilities)[:3]))
    assert S.items == top
    weights = np.exp(utilities[list(top)])
    assert value == pytest.approx(0.5 * weights.sum() / (1.0 + weights.sum()), rel=1e-12)


def test_single_rewarded_item_is_offered_alone(rng):
    utilities = rng.normal(size=6)
    rewards = np.zeros(6)
    rewards[4] = 1.0
    S, value = best_assortment(utilities, rewards, K=3)
    assert S == Assortment((4,))
    assert value == pytest.approx(np.exp(utilities[4]) / (1.0 + np.exp(utilities[4])), rel=1e-12)


def test_no_rewards_returns_first_item_with_zero_value():
    S, value = best_assortment(np.array([0.3, -0.2, 1.0]), np.zeros(3), K=2)
    assert S == Assortment((0,))
    assert value == 0.0
    assert brute_force_best(np.array([0.3, -0.2, 1.0]), np.zeros(3), K=2) == (S, value)


def test_capacity_one_is_the_best_singleton(rng):
    for _ in range(50):
        utilities = rng.normal(0.0, 1.5, size=7)
        rewards = rng.uniform(size=7)
        S, value = best_assortment(utilities, rewards, K=1)
        singletons = np.exp(utilities) * rewards / (1.0 + np.exp(utilities))
        assert len(S) == 1
        assert value == pytest.approx(singletons.max(), rel=1e-12)


def test_bisection_matches_exhaustive_search(rng):
    for _ in range(200):
        N = int(rng.integers(1, 11))
        K = int(rng.integers(1, 5))
        utilities = rng.normal(0.0, 1.5, size=N)
        rewards = rng.uniform(size=N)
        fast_set, fast_value = best_assortment(utilities, rewards, K)
        exact_set, exact_value = brute_force_best(utilities, rewards, K)
        assert fast_set == exact_set
        assert abs(fast_value - exact_value) <= 1e-9
        assert len(fast_set) <= K


def test_reported_value_is_expected_revenue(rng):
    for _ in range(20):
        ctx = RoundContext(features=sample_unit_ball(rng, 9, 4), rewards=rng.uniform(size=9))
        w = 2.0 * rng.normal(size=4)
        S, value = best_assortment(ctx.features @ w, ctx.rewards, K=4)
        assert value == pytest.approx(expected_revenue(ctx, S, w), rel=1e-12)


def test_raising_the_best_reward_item_never_lowers_the_optimum(rng):
    for _ in range(30):
        utilities = rng.normal(size=6)
        rewards = rng.uniform(size=6)
        _, before = best_assortment(utilities, rewards, K=3)
        boosted = utilities.copy()
        boosted[np.argmax(rewards)] += 1.0
        _, after = best_assortment(boosted, rewards, K=3)
        assert after >= before - 1e-12


def test_capacity_above_item_count(rng):
    utilities, rewards = rng.normal(size=3), rng.uniform(size=3)
    S, value = best_assortment(utilities, rewards, K=10)
    exact_set, exact_value = brute_force_best(utilities, rewards, K=10)
    assert S == exact_set
    assert value == pytest.approx(exact_value, abs=1e-9)


def test_extreme_utilities_stay_finite():
    S, value = best_assortment(np.array([1000.0, -1000.0, 0.0]), np.array([0.9, 1.0, 0.5]), K=2)
    assert np.isfinite(value)
    assert 0 in S.items


def test_revenue_formula():
    weights = np.array([1.0, 2.0, 3.0])
    rewards = np.array([0.5, 0.25, 1.0])
    assert revenue(weights, rewards, (0, 2)) == pytest.approx((0.5 + 3.0) / 5.0, rel=1e-14)


def test_exhaustive_search_is_size_limited():
    with pytest.raises(InvalidInputError):
        brute_force_best(np.zeros(25), np.ones(25), K=2)


def test_inputs_are_checked():
    with pytest.raises(InvalidInputError):
        best_assortment(np.zeros(3), np.ones(2), K=2)
    with pytest.raises(InvalidInputError):
        best_assortment(np.zeros(3), np.ones(3), K=0)
    with pytest.raises(InvalidInputError):
        best_assortment(np.zeros(0), np.zeros(0), K=1)


def test_item_priced_at_the_optimal_revenue_follows_the_tie_rule():
    """An item whose reward equals the optimal revenue neither helps nor hurts"""
    utilities, rewards = np.array([np.log(2.0 / 3.0), 0.3]), np.array([1.0, 0.4])
    S, value = best_assortment(utilities, rewards, K=2)
    assert (S, value) == brute_force_best(utilities, rewards, K=2)
    assert S == Assortment((0,))
    assert value == pytest.approx(0.4, abs=1e-12)

    # with the neutral item first, adding it gives the smaller tuple
    utilities, rewards = utilities[::-1].copy(), rewards[::-1].copy()
    S, value = best_assortment(utilities, rewards, K=2)
    assert S == brute_force_best(utilities, rewards, K=2)[0]
    assert S == Assortment((0, 1))
    assert best_assortment(utilities, rewards, K=1)[0] == Assortment((1,))
