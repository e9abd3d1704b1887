from __future__ import annotations


class MediationError(Exception):
    """Base exception for all mediationcore errors."""


class ConfigError(MediationError):
    """Raised when a configuration file or object is invalid."""


class DatasetError(MediationError):
    """Raised when data cannot be loaded, validated or transformed."""

    def __init__(self, message: str, column: str | None = None) -> None:
        self.column = column
        if column is not None:
            message = f"Column '{column}': {message}"
        super().__init__(message)


class ProbitError(MediationError):
    """Raised when a probit fit cannot be used."""


class SingularDesignError(MediationError):
    """Raised when a regression design or Hessian is rank deficient."""


class ObjectiveError(MediationError):
    """Raised when a term of the training objective is not finite."""

    def __init__(self, term: str, message: str = "non-finite value") -> None:
        self.term = term
        super().__init__(f"Objective term '{term}': {message}")


class TrainingError(MediationError):
    """Raised when optimization has to abort."""

    def __init__(self, step: int, message: str) -> None:
        self.step = step
        super().__init__(f"Step {step}: {message}")


class EstimationError(MediationError):
    """Raised when effects cannot be estimated or scored."""


class BaselineError(MediationError):
    """Raised when a baseline estimator is not applicable to the data."""


class EstimatorError(MediationError):
    """Raised when one estimator fails on one replication of an experiment."""

    def __init__(self, estimator: str, message: str) -> None:
        self.estimator = estimator
        super().__init__(f"Estimator '{estimator}': {message}")


class OutputError(MediationError):
    """Raised when result files cannot be written."""
