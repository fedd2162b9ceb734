"""
The MNL choice model.

Items of an offered assortment are picked with probability proportional to
exp(x_i . w); the outside option (position 0) has utility 0. All functions are
pure and take the per-round context, the assortment and a parameter vector.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp, softmax
from scipy import linalg as sla

from exceptions import InvalidInputError
from validation import context_validator
from .linalg import PsdMatrix

SELF_CONCORDANCE_CONSTANT = 3.0 * np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class RoundContext:
    """Item features (N x d) and rewards (N,) shown in one round."""

    features: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        rewards = np.array(self.rewards, dtype=float)
        is_valid, errors = context_validator.validate_context(features, rewards)
        if not is_valid:
            raise InvalidInputError("invalid round context: " + "; ".join(e.message for e in errors), errors)
        features.setflags(write=False)
        rewards.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "rewards", rewards)

    @property
    def N(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class MnlParameter:
    """Utility parameter w with ||w||_2 <= bound."""

    w: np.ndarray
    bound: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 1:
            raise InvalidInputError(f"parameter must be a vector, got shape {w.shape}")
        if not self.bound > 0:
            raise InvalidInputError(f"parameter bound must be positive, got {self.bound}")
        if np.linalg.norm(w) > self.bound + 1e-10:
            raise InvalidInputError(f"parameter norm {np.linalg.norm(w):.6g} exceeds bound {self.bound}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class Assortment:
    """Sorted tuple of distinct item indices (0-based)."""

    items: Tuple[int, ...]

    def __post_init__(self):
        items = tuple(sorted(int(i) for i in self.items))
        if not items:
            raise InvalidInputError("assortment must contain at least one item")
        if len(set(items)) != len(items):
            raise InvalidInputError(f"assortment has duplicate items: {items}")
        if items[0] < 0:
            raise InvalidInputError(f"item index out of range: {items[0]}")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, items: Iterable[int]) -> "Assortment":
        return cls(tuple(items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def check(self, ctx: RoundContext, K: Optional[int] = None) -> None:
        if self.items[-1] >= ctx.N:
            raise InvalidInputError(f"item index {self.items[-1]} out of range for N={ctx.N}")
        if K is not None and len(self.items) > K:
            raise InvalidInputError(f"assortment size {len(self.items)} exceeds K={K}")


@dataclass(frozen=True)
class ChoiceOutcome:
    """Choice among the outside option (position 0) and the offered items (positions 1..size)."""

    position: int
    size: int

    def __post_init__(self):
        if not 0 <= self.position <= self.size:
            raise InvalidInputError(f"choice position {self.position} out of range for assortment size {self.size}")

    @property
    def onehot(self) -> np.ndarray:
        y = np.zeros(self.size + 1)
        y[self.position] = 1.0
        return y

    @property
    def outside(self) -> bool:
        return self.position == 0

    def chosen_item(self, S: Assortment) -> Optional[int]:
        if self.position == 0:
            return None
        return S.items[self.position - 1]


ParameterLike = Union[MnlParameter, np.ndarray]


def _vector(w: ParameterLike) -> np.ndarray:
    return w.w if isinstance(w, MnlParameter) else np.asarray(w, dtype=float)


def _offered(ctx: RoundContext, S: Assortment) -> np.ndarray:
    S.check(ctx)
    return ctx.features[list(S.items)]


def _with_outside(z: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], z))


def utilities(ctx: RoundContext, S: Assortment, w: ParameterLike) -> np.ndarray:
    return _offered(ctx, S) @ _vector(w)


def choice_probs(ctx: RoundContext, S: Assortment, w: ParameterLike) -> np.ndarray:
    """Probabilities over (outside, S[0], ..., S[-1]); sums to one."""
    return softmax(_with_outside(utilities(ctx, S, w)))


def sample_choice(ctx: RoundContext, S: Assortment, w: ParameterLike,
                  rng: np.random.Generator) -> ChoiceOutcome:
    probs = choice_probs(ctx, S, w)
    position = int(rng.choice(probs.size, p=probs))
    return ChoiceOutcome(position=position, size=len(S))


def expected_revenue(ctx: RoundContext, S: Assortment, w: ParameterLike) -> float:
    probs = choice_probs(ctx, S, w)
    return float(probs[1:] @ ctx.rewards[list(S.items)])


def _check_outcome(S: Assortment, y: ChoiceOutcome) -> None:
    if y.size != len(S):
        raise InvalidInputError(f"outcome size {y.size} does not match assortment size {len(S)}")


def loss(ctx: RoundContext, S: Assortment, y: ChoiceOutcome, w: ParameterLike) -> float:
    """Negative log-likelihood of the observed choice, outside option included."""
    _check_outcome(S, y)
    return utility_loss(utilities(ctx, S, w), y.position)


def loss_gradient(ctx: RoundContext, S: Assortment, y: ChoiceOutcome, w: ParameterLike) -> np.ndarray:
    _check_outcome(S, y)
    X = _offered(ctx, S)
    probs = softmax(_with_outside(X @ _vector(w)))
    return X.T @ (probs[1:] - y.onehot[1:])


def loss_hessian(ctx: RoundContext, S: Assortment, w: ParameterLike) -> PsdMatrix:
    X = _offered(ctx, S)
    return PsdMatrix(X.T @ utility_hessian(X @ _vector(w)) @ X)


def utility_loss(z: np.ndarray, position: int) -> float:
    """Loss as a function of the offered utilities z (outside option implicit)."""
    full = _with_outside(np.asarray(z, dtype=float))
    return float(logsumexp(full) - full[position])


def utility_hessian(z: np.ndarray) -> np.ndarray:
    """diag(p) - p p^T over the offered items."""
    p = softmax(_with_outside(np.asarray(z, dtype=float)))[1:]
    return np.diag(p) - np.outer(p, p)


def softmax_pinv(q: np.ndarray) -> np.ndarray:
    """Utilities z with softmax(z) = q for item probabilities q (the outside option takes the rest)."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0 or np.any(q <= 0):
        raise InvalidInputError("softmax pseudo-inverse needs a nonempty vector of positive probabilities")
    total = float(q.sum())
    if total >= 1.0:
        raise InvalidInputError(f"probabilities must sum to less than 1, got {total}")
    return np.log(q) - np.log1p(-total)


@dataclass
class SelfConcordanceReport:
    """Outcome of a sampled self-concordance check along lines a + s b."""

    max_ratio: float = 0.0
    max_violation: float = 0.0
    max_fd_error: float = 0.0
    checked: int = 0
    skipped: int = 0
    bound: float = SELF_CONCORDANCE_CONSTANT

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound + 1e-3


def _line_moments(z: np.ndarray, u: np.ndarray) -> Tuple[float, float]:
    # second and third central moments of u (u_0 = 0) under the choice distribution
    p = softmax(_with_outside(z))
    v = _with_outside(u)
    centered = v - p @ v
    return float(p @ centered ** 2), float(p @ centered ** 3)


def check_self_concordance(ctx: RoundContext, S: Assortment, a: np.ndarray, b: np.ndarray,
                           samples: int = 100, rng: Optional[np.random.Generator] = None,
                           s_range: float = 1.0) -> SelfConcordanceReport:
    """Check |phi'''(s)| <= 3 sqrt(2) ||X_S b||_inf phi''(s) for phi(s) = loss(a + s b).

    Derivatives come from central differences (five-point for phi'', seven-point
    for phi''') and are compared against the closed-form moments.
    """
    X = _offered(ctx, S)
    base = X @ np.asarray(a, dtype=float)
    direction = X @ np.asarray(b, dtype=float)
    scale = float(np.max(np.abs(direction))) if direction.size else 0.0
    report = SelfConcordanceReport()
    if scale == 0.0:
        report.checked = samples
        return report

    rng = rng if rng is not None else np.random.default_rng(0)
    h = 1e-2 / max(1.0, scale)
    phi = lambda s: utility_loss(base + s * direction, 0)

    for s in rng.uniform(-s_range, s_range, size=samples):
        f = {k: phi(s + k * h) for k in (-3, -2, -1, 0, 1, 2, 3)}
        second = (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * h ** 2)
        third = (-f[3] + 8 * f[2] - 13 * f[1] + 13 * f[-1] - 8 * f[-2] + f[-3]) / (8 * h ** 3)
        exact_second, exact_third = _line_moments(base + s * direction, direction)
        if exact_second < 1e-8:
            report.skipped += 1
            continue
        report.checked += 1
        report.max_fd_error = max(report.max_fd_error,
                                  abs(second - exact_second) / exact_second,
                                  abs(third - exact_third) / (scale * exact_second))
        ratio = abs(third) / (scale * second) if second > 0 else np.inf
        report.max_ratio = max(report.max_ratio, ratio)
        report.max_violation = max(report.max_violation,
                                   abs(third) - SELF_CONCORDANCE_CONSTANT * scale * second)
    return report


@dataclass(frozen=True)
class SandwichBounds:
    """Generalized eigenvalue range of (H(z2), H(z1)) and the e^{-m}, e^{m} envelope."""

    min_eigenvalue: float
    max_eigenvalue: float
    lower: float
    upper: float

    def holds(self, tol: float = 1e-6) -> bool:
        return self.lower - tol <= self.min_eigenvalue and self.max_eigenvalue <= self.upper + tol


def hessian_sandwich_bounds(z1: np.ndarray, z2: np.ndarray, ridge: float = 1e-10) -> SandwichBounds:
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    m = SELF_CONCORDANCE_CONSTANT * float(np.max(np.abs(z1 - z2)))
    h1 = utility_hessian(z1) + ridge * np.eye(z1.size)
    eigenvalues = sla.eigh(utility_hessian(z2), h1, eigvals_only=True)
    return SandwichBounds(
        min_eigenvalue=float(eigenvalues[0]),
        max_eigenvalue=float(eigenvalues[-1]),
        lower=float(np.exp(-m)),
        upper=float(np.exp(m)),
    )


def second_order_gap(ctx: RoundContext, S: Assortment, y: ChoiceOutcome,
                     w: np.ndarray, w_prime: np.ndarray) -> Tuple[float, float, float]:
    """(Bregman gap of the loss at w' towards w, its quadratic lower bound, alpha_hat)."""
    w = np.asarray(w, dtype=float)
    w_prime = np.asarray(w_prime, dtype=float)
    step = w - w_prime
    gap = loss(ctx, S, y, w) - loss(ctx, S, y, w_prime) - float(loss_gradient(ctx, S, y, w_prime) @ step)
    alpha_hat = float(np.max(np.abs(_offered(ctx, S) @ step)))
    bound = loss_hessian(ctx, S, w_prime).quad(step) / (2.0 + SELF_CONCORDANCE_CONSTANT * alpha_hat)
    return gap, bound, alpha_hat
