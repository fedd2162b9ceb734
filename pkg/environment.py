"""
Synthetic MNL environment: true parameter, per-round contexts and choice feedback.
"""

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from exceptions import InvalidInputError
from mnl.linalg import sample_unit_ball
from mnl.model import Assortment, ChoiceOutcome, RoundContext, sample_choice


@dataclass(frozen=True)
class EnvironmentConfig:
    """Problem dimensions, horizon and seed of one synthetic instance."""

    N: int
    K: int
    d: int
    B: float
    T: int
    seed: int = 0

    def __post_init__(self):
        if min(self.N, self.K, self.d, self.T) < 1:
            raise InvalidInputError(f"N, K, d and T must be positive, got {self}")
        if self.K > self.N:
            raise InvalidInputError(f"assortment size K={self.K} exceeds item count N={self.N}")
        if not self.B > 0:
            raise InvalidInputError(f"parameter bound must be positive, got {self.B}")


def draw_true_parameter(rng: np.random.Generator, d: int, B: float) -> np.ndarray:
    """w* uniform on the radius-B ball."""
    return B * sample_unit_ball(rng, 1, d)[0]


def env_step(cfg: EnvironmentConfig, w_star: np.ndarray, rng: np.random.Generator, t: int) -> RoundContext:
    """Fresh features uniform on the unit ball and rewards uniform on [0, 1]."""
    if not 1 <= t <= cfg.T:
        raise InvalidInputError(f"round {t} outside horizon 1..{cfg.T}")
    features = sample_unit_ball(rng, cfg.N, cfg.d)
    rewards = rng.uniform(size=cfg.N)
    return RoundContext(features=features, rewards=rewards)


class ContextSource(ABC):
    """Produces the round contexts of one run and hashes what it produced."""

    def __init__(self, cfg: EnvironmentConfig):
        self.cfg = cfg
        self._digest = hashlib.sha256()

    @abstractmethod
    def _generate(self, t: int) -> RoundContext:
        pass

    def next_context(self, t: int) -> RoundContext:
        ctx = self._generate(t)
        self._digest.update(ctx.features.tobytes())
        self._digest.update(ctx.rewards.tobytes())
        return ctx

    @property
    def stream_hash(self) -> str:
        return self._digest.hexdigest()


class UnitBallContexts(ContextSource):
    """i.i.d. contexts drawn by env_step."""

    def __init__(self, cfg: EnvironmentConfig, w_star: np.ndarray, rng: np.random.Generator):
        super().__init__(cfg)
        self.w_star = w_star
        self.rng = rng

    def _generate(self, t: int) -> RoundContext:
        return env_step(self.cfg, self.w_star, self.rng, t)


class ChoiceSimulator:
    """Samples customer choices under the true parameter from its own noise stream."""

    def __init__(self, w_star: np.ndarray, rng: np.random.Generator):
        self.w_star = np.asarray(w_star, dtype=float)
        self.rng = rng

    def responder(self, ctx: RoundContext):
        def choose(S: Assortment) -> ChoiceOutcome:
            return sample_choice(ctx, S, self.w_star, self.rng)
        return choose
