"""
Exception types raised by the MNL bandit laboratory.
"""

from typing import List, Optional


class MnlBanditError(Exception):
    """Base class for all library errors."""


class InvalidInputError(MnlBanditError, ValueError):
    """Raised when an operation receives inputs violating its preconditions."""

    def __init__(self, message: str, errors: Optional[List["ValidationError"]] = None):
        super().__init__(message)
        self.errors = list(errors or [])


class ConfigurationError(InvalidInputError):
    """Raised when an experiment configuration fails validation."""


class ConvergenceError(MnlBanditError, RuntimeError):
    """Raised when an iterative solver hits its iteration cap."""

    def __init__(self, solver: str, iterations: int, residual: float):
        super().__init__(f"{solver} did not converge after {iterations} iterations (residual {residual:.3e})")
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
