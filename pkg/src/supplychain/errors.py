from typing import Any, Dict, Optional


class SupplyChainError(Exception):
    """Base error for the simulation engine with a message and optional details."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(message)


class ProblemError(SupplyChainError):
    """Invalid problem instance or an operation applied to the wrong node/shape."""


class InfeasibleProblemError(ProblemError):
    """Inbound capacity cannot cover a retailer's demand."""


class SingularSystemError(SupplyChainError):
    """The KKT system has a deficient pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"KKT matrix is singular: pivot {pivot} has magnitude {abs(value):.3e}",
            {"pivot": pivot, "value": value},
        )


class ConfigError(SupplyChainError):
    """Inconsistent or invalid run configuration, naming the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"Invalid config key '{key}': {message}", {"key": key})


class TraceSchemaError(SupplyChainError):
    """Trace file is truncated or does not match its problem."""


class VerificationError(SupplyChainError):
    """One or more theory checks failed."""
