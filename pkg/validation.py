from typing import Any, List, Sequence, Tuple
from dataclasses import dataclass

import numpy as np

from logging_config import log_validation_event

@dataclass
class ValidationError:
    field: str
    message: str
    code: str

class ContextValidator:
    """Validate per-round item features and rewards"""

    # Slack on the unit-norm and [0,1] bounds for roundoff in generated data
    NORM_SLACK = 1e-9

    def validate_context(self, features: np.ndarray, rewards: np.ndarray) -> Tuple[bool, List[ValidationError]]:
        """Validate a round's features (N x d) and rewards (N,)"""
        errors = []

        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            errors.append(ValidationError(
                field="features",
                message=f"Features must be a non-empty N x d array, got shape {features.shape}",
                code="INVALID_SHAPE"
            ))
            return self._report(errors)

        if rewards.shape != (features.shape[0],):
            errors.append(ValidationError(
                field="rewards",
                message=f"Expected {features.shape[0]} rewards, got shape {rewards.shape}",
                code="INVALID_SHAPE"
            ))

        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(rewards))):
            errors.append(ValidationError(
                field="features",
                message="Features and rewards must be finite",
                code="NON_FINITE"
            ))
            return self._report(errors)

        norms = np.linalg.norm(features, axis=1)
        if np.any(norms > 1.0 + self.NORM_SLACK):
            errors.append(ValidationError(
                field="features",
                message=f"Feature norm {norms.max():.6f} exceeds 1",
                code="NORM_BOUND"
            ))

        if rewards.size and (rewards.min() < -self.NORM_SLACK or rewards.max() > 1.0 + self.NORM_SLACK):
            errors.append(ValidationError(
                field="rewards",
                message=f"Rewards must lie in [0, 1], got range [{rewards.min():.6f}, {rewards.max():.6f}]",
                code="REWARD_BOUND"
            ))

        return self._report(errors)

    def _report(self, errors: List[ValidationError]) -> Tuple[bool, List[ValidationError]]:
        # Successful contexts are not logged; there is one per round
        for error in errors:
            log_validation_event("CONTEXT", error.field, error.message, "WARNING")
        return len(errors) == 0, errors

class ExperimentValidator:
    """Validate experiment configurations before any replica is launched"""

    def validate_experiment(self, config: Any, known_algorithms: Sequence[str]) -> Tuple[bool, List[ValidationError]]:
        """Validate an ExperimentConfig comprehensively"""
        errors = []

        errors.extend(self._validate_algorithms(config, known_algorithms))
        errors.extend(self._validate_dimensions(config))
        errors.extend(self._validate_levels(config))

        subject = f"experiment seed={getattr(config, 'seed', 'unknown')}"
        if errors:
            log_validation_event("FAILED", subject, f"Found {len(errors)} validation errors", "WARNING")
            for error in errors:
                log_validation_event("ERROR_DETAIL", subject, f"{error.field}: {error.message}", "WARNING")
        else:
            log_validation_event("SUCCESS", subject, "All validations passed", "INFO")

        return len(errors) == 0, errors

    def _validate_algorithms(self, config: Any, known_algorithms: Sequence[str]) -> List[ValidationError]:
        errors = []
        if not config.algorithms:
            errors.append(ValidationError(
                field="algorithms",
                message="At least one algorithm is required",
                code="MISSING_REQUIRED_FIELD"
            ))
        for name in config.algorithms:
            if name not in known_algorithms:
                errors.append(ValidationError(
                    field="algorithms",
                    message=f"Unknown algorithm '{name}'. Must be one of: {sorted(known_algorithms)}",
                    code="INVALID_FORMAT"
                ))
        if len(set(config.algorithms)) != len(config.algorithms):
            errors.append(ValidationError(
                field="algorithms",
                message="Algorithms must not repeat",
                code="DUPLICATE_REQUEST"
            ))
        return errors

    def _validate_dimensions(self, config: Any) -> List[ValidationError]:
        errors = []
        for field in ("N", "K", "d", "T", "runs"):
            value = getattr(config, field)
            if not isinstance(value, (int, np.integer)) or value < 1:
                errors.append(ValidationError(
                    field=field,
                    message=f"'{field}' must be a positive integer, got {value!r}",
                    code="INVALID_DATA_TYPE"
                ))
        if not errors and config.K > config.N:
            errors.append(ValidationError(
                field="K",
                message=f"Assortment size K={config.K} exceeds item count N={config.N}",
                code="INVALID_RANGE"
            ))
        if not config.B > 0:
            errors.append(ValidationError(
                field="B",
                message=f"Parameter bound B must be positive, got {config.B}",
                code="INVALID_RANGE"
            ))
        if config.workers < 1:
            errors.append(ValidationError(
                field="workers",
                message=f"Worker count must be at least 1, got {config.workers}",
                code="INVALID_RANGE"
            ))
        return errors

    def _validate_levels(self, config: Any) -> List[ValidationError]:
        errors = []
        if not 0.0 < config.delta <= 1.0:
            errors.append(ValidationError(
                field="delta",
                message=f"Failure level delta must lie in (0, 1], got {config.delta}",
                code="INVALID_RANGE"
            ))
        for field in ("tau_multiplier", "radius_multiplier", "regularizer_multiplier"):
            if not getattr(config, field) > 0:
                errors.append(ValidationError(
                    field=field,
                    message=f"'{field}' must be positive, got {getattr(config, field)}",
                    code="INVALID_RANGE"
                ))
        if config.tau_override is not None and not config.tau_override > 0:
            errors.append(ValidationError(
                field="tau_override",
                message=f"Constant threshold must be positive, got {config.tau_override}",
                code="INVALID_RANGE"
            ))
        if config.baseline_alpha_scale < 0 or not config.baseline_lambda > 0:
            errors.append(ValidationError(
                field="baseline",
                message="Baseline alpha scale must be >= 0 and lambda > 0",
                code="INVALID_RANGE"
            ))
        return errors

# Global validator instances
context_validator = ContextValidator()
experiment_validator = ExperimentValidator()
