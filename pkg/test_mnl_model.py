"""
Tests for the MNL choice model: probabilities, sampling, loss calculus and
the self-concordance machinery.
"""

import numpy as np
import pytest
from scipy.special import softmax

from exceptions import InvalidInputError
from mnl.linalg import sample_unit_ball
from mnl.model import (
    SELF_CONCORDANCE_CONSTANT,
    Assortment,
    ChoiceOutcome,
    MnlParameter,
    RoundContext,
    check_self_concordance,
    choice_probs,
    expected_revenue,
    hessian_sandwich_bounds,
    loss,
    loss_gradient,
    loss_hessian,
    sample_choice,
    second_order_gap,
    softmax_pinv,
)


def random_context(rng, N, d):
    return RoundContext(features=sample_unit_ball(rng, N, d), rewards=rng.uniform(size=N))


def test_zero_parameter_gives_uniform_choice():
    """With w = 0 every alternative, outside option included, is equally likely"""
    rng = np.random.default_rng(0)
    ctx = random_context(rng, 6, 3)
    probs = choice_probs(ctx, Assortment((0, 2, 3, 5)), np.zeros(3))
    np.testing.assert_allclose(probs, np.full(5, 0.2), atol=1e-15)


def test_singleton_with_zero_utility_is_a_coin_flip():
    ctx = RoundContext(features=[[1.0, 0.0]], rewards=[0.5])
    probs = choice_probs(ctx, Assortment((0,)), np.array([0.0, 1.0]))
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-15)


def test_probabilities_match_hand_evaluation():
    ctx = RoundContext(features=[[1.0, 0.0], [-1.0, 0.0]], rewards=[1.0, 1.0])
    probs = choice_probs(ctx, Assortment((0, 1)), np.array([1.0, 0.0]))
    denominator = 1.0 + np.e + np.exp(-1.0)
    np.testing.assert_allclose(probs, [1.0 / denominator, np.e / denominator, np.exp(-1.0) / denominator],
                               rtol=1e-14)


def test_probabilities_sum_to_one(rng):
    for _ in range(50):
        N, d = int(rng.integers(1, 8)), int(rng.integers(1, 6))
        ctx = random_context(rng, N, d)
        S = Assortment(tuple(rng.choice(N, size=int(rng.integers(1, N + 1)), replace=False)))
        probs = choice_probs(ctx, S, 3.0 * rng.normal(size=d))
        assert probs.shape == (len(S) + 1,)
        assert np.all(probs >= 0.0)
        assert abs(probs.sum() - 1.0) <= 1e-12


def test_parameter_object_and_raw_vector_agree(rng):
    ctx = random_context(rng, 4, 3)
    w = 0.5 * sample_unit_ball(rng, 1, 3)[0]
    S = Assortment((1, 3))
    np.testing.assert_array_equal(choice_probs(ctx, S, MnlParameter(w, 1.0)), choice_probs(ctx, S, w))


def test_large_utility_saturates_sampling():
    ctx = RoundContext(features=[[1.0, 0.0]], rewards=[1.0])
    rng = np.random.default_rng(3)
    draws = [sample_choice(ctx, Assortment((0,)), np.array([50.0, 0.0]), rng).position for _ in range(10000)]
    assert np.mean(np.array(draws) == 1) > 0.999


def test_sampled_frequencies_match_probabilities():
    ctx = random_context(np.random.default_rng(4), 4, 2)
    S = Assortment((0, 1, 2, 3))
    rng = np.random.default_rng(5)
    n = 20000
    counts = np.bincount([sample_choice(ctx, S, np.zeros(2), rng).position for _ in range(n)], minlength=5)
    sigma = np.sqrt(0.2 * 0.8 / n)
    assert np.all(np.abs(counts / n - 0.2) <= 4 * sigma)


def test_sampling_is_reproducible_for_a_seed(rng):
    ctx = random_context(rng, 5, 3)
    S = Assortment((0, 2, 4))
    w = rng.normal(size=3)
    a, b = np.random.default_rng(11), np.random.default_rng(11)
    assert [sample_choice(ctx, S, w, a).position for _ in range(50)] == \
           [sample_choice(ctx, S, w, b).position for _ in range(50)]


def test_expected_revenue_with_unit_rewards():
    rng = np.random.default_rng(6)
    ctx = RoundContext(features=sample_unit_ball(rng, 5, 2), rewards=np.ones(5))
    for m in range(1, 6):
        value = expected_revenue(ctx, Assortment(tuple(range(m))), np.zeros(2))
        assert value == pytest.approx(m / (m + 1), abs=1e-14)


def test_expected_revenue_is_zero_without_rewards(rng):
    ctx = RoundContext(features=sample_unit_ball(rng, 4, 3), rewards=np.zeros(4))
    assert expected_revenue(ctx, Assortment((0, 1, 2)), rng.normal(size=3)) == 0.0


def test_singleton_loss_values():
    ctx = RoundContext(features=[[0.6, 0.8]], rewards=[1.0])
    S = Assortment((0,))
    w = np.array([1.0, 0.0])
    assert loss(ctx, S, ChoiceOutcome(1, 1), w) == pytest.approx(np.log1p(np.exp(-0.6)), abs=1e-14)
    assert loss(ctx, S, ChoiceOutcome(0, 1), w) == pytest.approx(np.log1p(np.exp(0.6)), abs=1e-14)


def test_loss_at_zero_is_log_of_alternatives(rng):
    ctx = random_context(rng, 5, 3)
    S = Assortment((0, 1, 4))
    for position in range(4):
        assert loss(ctx, S, ChoiceOutcome(position, 3), np.zeros(3)) == pytest.approx(np.log(4.0), abs=1e-14)


def test_loss_is_negative_log_probability(rng):
    ctx = random_context(rng, 6, 4)
    S = Assortment((1, 2, 5))
    w = rng.normal(size=4)
    probs = choice_probs(ctx, S, w)
    for position in range(4):
        assert loss(ctx, S, ChoiceOutcome(position, 3), w) == pytest.approx(-np.log(probs[position]), rel=1e-12)


def test_singleton_gradient_at_zero():
    x = np.array([0.3, -0.4])
    ctx = RoundContext(features=[x], rewards=[1.0])
    S = Assortment((0,))
    np.testing.assert_allclose(loss_gradient(ctx, S, ChoiceOutcome(1, 1), np.zeros(2)), -x / 2, atol=1e-15)
    np.testing.assert_allclose(loss_gradient(ctx, S, ChoiceOutcome(0, 1), np.zeros(2)), x / 2, atol=1e-15)


def test_gradient_matches_central_differences(rng):
    step = 1e-6
    for _ in range(30):
        d, size = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        ctx = random_context(rng, size, d)
        S = Assortment(tuple(range(size)))
        y = ChoiceOutcome(int(rng.integers(0, size + 1)), size)
        w = rng.normal(size=d)
        fd = np.array([(loss(ctx, S, y, w + step * e) - loss(ctx, S, y, w - step * e)) / (2 * step)
                       for e in np.eye(d)])
        np.testing.assert_allclose(loss_gradient(ctx, S, y, w), fd, atol=1e-7)


def test_hessian_matches_gradient_differences(rng):
    step = 1e-6
    for _ in range(30):
        d, size = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        ctx = random_context(rng, size, d)
        S = Assortment(tuple(range(size)))
        y = ChoiceOutcome(int(rng.integers(0, size + 1)), size)
        w = rng.normal(size=d)
        fd = np.array([(loss_gradient(ctx, S, y, w + step * e) - loss_gradient(ctx, S, y, w - step * e)) / (2 * step)
                       for e in np.eye(d)])
        np.testing.assert_allclose(loss_hessian(ctx, S, w).entries, fd, atol=1e-6)


def test_singleton_hessian_at_zero():
    x = np.array([0.6, 0.8])
    ctx = RoundContext(features=[x], rewards=[1.0])
    np.testing.assert_allclose(loss_hessian(ctx, Assortment((0,)), np.zeros(2)).entries,
                               0.25 * np.outer(x, x), atol=1e-15)


def test_hessian_is_psd_and_bounded(rng):
    for _ in range(50):
        d, size = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        ctx = random_context(rng, size, d)
        eigenvalues = np.linalg.eigvalsh(loss_hessian(ctx, Assortment(tuple(range(size))), 2 * rng.normal(size=d)).entries)
        assert eigenvalues.min() >= -1e-12
        assert eigenvalues.max() <= 1.0 + 1e-10


def test_softmax_pinv_of_uniform_split():
    np.testing.assert_allclose(softmax_pinv(np.array([1 / 3, 1 / 3])), [0.0, 0.0], atol=1e-14)


def test_softmax_pinv_inverts_softmax(rng):
    for _ in range(20):
        z = rng.normal(0.0, 2.0, size=int(rng.integers(1, 6)))
        q = softmax(np.concatenate(([0.0], z)))[1:]
        np.testing.assert_allclose(softmax_pinv(q), z, atol=1e-10)


def test_softmax_pinv_rejects_full_mass():
    with pytest.raises(InvalidInputError):
        softmax_pinv(np.array([0.5, 0.5]))
    with pytest.raises(InvalidInputError):
        softmax_pinv(np.array([0.0, 0.2]))


def test_self_concordance_along_constant_line_is_trivial(rng):
    ctx = random_context(rng, 3, 2)
    report = check_self_concordance(ctx, Assortment((0, 1, 2)), a=np.array([0.5, 0.0]), b=np.zeros(2), samples=10)
    assert report.max_ratio == 0.0
    assert report.passed


def test_self_concordance_ratio_within_constant(rng):
    for _ in range(30):
        d, size = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        ctx = random_context(rng, size, d)
        report = check_self_concordance(ctx, Assortment(tuple(range(size))),
                                        a=2.0 * sample_unit_ball(rng, 1, d)[0], b=rng.normal(size=d),
                                        samples=10, rng=rng)
        assert report.max_ratio <= SELF_CONCORDANCE_CONSTANT + 1e-3
        assert report.checked + report.skipped == 10


def test_binary_self_concordance_ratio_at_most_one(rng):
    for _ in range(20):
        ctx = random_context(rng, 1, 3)
        report = check_self_concordance(ctx, Assortment((0,)), a=sample_unit_ball(rng, 1, 3)[0],
                                        b=rng.normal(size=3), samples=10, rng=rng)
        assert report.max_ratio <= 1.0 + 1e-3


def test_hessian_sandwich_holds(rng):
    for _ in range(50):
        size = int(rng.integers(1, 6))
        z1 = rng.uniform(-2.0, 2.0, size=size)
        z2 = z1 + rng.uniform(-1.0, 1.0, size=size)
        bounds = hessian_sandwich_bounds(z1, z2)
        assert bounds.holds(1e-6)
        assert bounds.lower <= 1.0 <= bounds.upper


def test_second_order_gap_respects_quadratic_bound(rng):
    for _ in range(50):
        d, size = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        ctx = random_context(rng, size, d)
        S = Assortment(tuple(range(size)))
        y = ChoiceOutcome(int(rng.integers(0, size + 1)), size)
        w_prime = sample_unit_ball(rng, 1, d)[0]
        w = w_prime + rng.normal(size=d)
        gap, bound, alpha_hat = second_order_gap(ctx, S, y, w, w_prime)
        assert alpha_hat >= 0.0
        assert gap >= bound - 1e-10


def test_context_rejects_long_features():
    with pytest.raises(InvalidInputError):
        RoundContext(features=[[1.5, 0.0]], rewards=[0.5])


def test_context_rejects_rewards_outside_unit_interval():
    with pytest.raises(InvalidInputError):
        RoundContext(features=[[0.5, 0.0]], rewards=[1.5])


def test_context_is_read_only(rng):
    ctx = random_context(rng, 3, 2)
    with pytest.raises(ValueError):
        ctx.features[0, 0] = 0.0


def test_parameter_norm_is_enforced():
    with pytest.raises(InvalidInputError):
        MnlParameter(np.array([2.0, 0.0]), 1.0)


def test_assortment_is_sorted_and_distinct():
    assert Assortment((4, 0, 2)).items == (0, 2, 4)
    with pytest.raises(InvalidInputError):
        Assortment((1, 1))
    with pytest.raises(InvalidInputError):
        Assortment(())


def test_assortment_check_against_context(rng):
    ctx = random_context(rng, 3, 2)
    with pytest.raises(InvalidInputError):
        Assortment((5,)).check(ctx)
    with pytest.raises(InvalidInputError):
        Assortment((0, 1, 2)).check(ctx, K=2)
    Assortment((0, 2)).check(ctx, K=2)


def test_choice_outcome_encoding():
    S = Assortment((3, 7))
    outcome = ChoiceOutcome(position=2, size=2)
    np.testing.assert_array_equal(outcome.onehot, [0.0, 0.0, 1.0])
    assert outcome.chosen_item(S) == 7
    assert ChoiceOutcome(position=0, size=2).outside
    assert ChoiceOutcome(position=0, size=2).chosen_item(S) is None
    with pytest.raises(InvalidInputError):
        ChoiceOutcome(position=3, size=2)
