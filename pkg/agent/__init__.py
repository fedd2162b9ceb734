"""
Agent package for the MNL bandit laboratory.
Contains the optimistic online agents, the MLE-based agent and the baselines.
"""

from .base_agent import BaseAgent, WARMUP, PLANNING
from .ofu_mnl_agent import OfuMnlPlusPlusAgent, OfuMnlPlusAgent
from .mle_agent import OfuMleMnlAgent
from .baselines import UcbMnlAgent, TsMnlAgent, GreedyMnlAgent

__all__ = [
    "BaseAgent",
    "WARMUP",
    "PLANNING",
    "OfuMnlPlusPlusAgent",
    "OfuMnlPlusAgent",
    "OfuMleMnlAgent",
    "UcbMnlAgent",
    "TsMnlAgent",
    "GreedyMnlAgent"
]
