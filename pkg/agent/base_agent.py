"""
Base agent class for MNL bandit policies.
Defines the select/learn interface and the per-round bookkeeping shared by all agents.
"""

import time
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional, Tuple

from logging_config import get_main_logger, log_round
from mnl.linalg import Ellipsoid
from mnl.model import Assortment, ChoiceOutcome, RoundContext

WARMUP = "warmup"
PLANNING = "planning"


class BaseAgent(ABC):
    """Base class for all assortment-selection agents."""

    def __init__(self, agent_id: str, agent_type: str, N: int, K: int, d: int, B: float):
        self.agent_id = agent_id
        self.agent_type = agent_type
        self.N = N
        self.K = K
        self.d = d
        self.B = B
        self.logger = get_main_logger()
        self.last_phase = PLANNING
        self.metrics = self._fresh_metrics()

    @staticmethod
    def _fresh_metrics() -> Dict[str, Any]:
        return {
            "rounds_played": 0,
            "warmup_rounds": 0,
            "planning_rounds": 0,
            "total_round_time": 0.0,
            "average_round_time": 0.0
        }

    @abstractmethod
    def select(self, ctx: RoundContext, t: int) -> Assortment:
        """Choose the assortment to offer in round t and set last_phase."""
        pass

    @abstractmethod
    def learn(self, ctx: RoundContext, S: Assortment, outcome: ChoiceOutcome, t: int) -> None:
        """Update the agent's estimates from the observed choice."""
        pass

    @property
    def search_space(self) -> Optional[Ellipsoid]:
        """Confidence ellipsoid restricting the online update, when the agent keeps one."""
        return None

    def play_round(self, ctx: RoundContext, t: int,
                   choose: Callable[[Assortment], ChoiceOutcome]) -> Tuple[Assortment, ChoiceOutcome, float]:
        """Select, observe through `choose`, learn. Returns the agent's own wall-clock in seconds."""
        start = time.perf_counter()
        S = self.select(ctx, t)
        selected = time.perf_counter()
        outcome = choose(S)
        observed = time.perf_counter()
        self.learn(ctx, S, outcome, t)
        elapsed = (selected - start) + (time.perf_counter() - observed)

        self.update_metrics(elapsed, self.last_phase)
        log_round(self.agent_id, t, self.last_phase, f"S={S.items} choice={outcome.position}")
        return S, outcome, elapsed

    def update_metrics(self, round_time: float, phase: str):
        """Update agent round counters and timing."""
        self.metrics["rounds_played"] += 1
        self.metrics["total_round_time"] += round_time
        if phase == WARMUP:
            self.metrics["warmup_rounds"] += 1
        else:
            self.metrics["planning_rounds"] += 1
        self.metrics["average_round_time"] = (
            self.metrics["total_round_time"] / self.metrics["rounds_played"]
        )

    def get_status(self) -> Dict[str, Any]:
        """Get agent configuration and round metrics."""
        return {
            "agent_id": self.agent_id,
            "agent_type": self.agent_type,
            "dimensions": {"N": self.N, "K": self.K, "d": self.d, "B": self.B},
            "last_phase": self.last_phase,
            "metrics": self.metrics.copy()
        }

    def reset_metrics(self):
        """Reset agent metrics."""
        self.metrics = self._fresh_metrics()
        self.logger.info(f"Metrics reset for agent {self.agent_id}")

    def __str__(self) -> str:
        return f"{self.agent_type}({self.agent_id})"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(agent_id='{self.agent_id}', agent_type='{self.agent_type}')"
