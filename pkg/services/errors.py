"""
Exception hierarchy shared by every service.

Verdicts (FAILED / INCONCLUSIVE) are returned inside certificates and reports;
exceptions are reserved for calls that cannot produce a result at all.
"""
from typing import Optional


class VerificationError(Exception):
    """Base class for all errors raised by the verification services."""
    pass


class DomainError(VerificationError, ValueError):
    """An argument lies outside the mathematical domain of a function."""
    pass


class ParameterError(VerificationError, ValueError):
    """A parameter combination is invalid (k too small, c above threshold, ...)."""
    pass


class BudgetExceededError(VerificationError, RuntimeError):
    """
    The work estimated for a request exceeds the configured budget.

    Attributes:
        estimated: Estimated amount of work (tables, cells, boxes)
        allowed: Budget that was exceeded
    """

    def __init__(self, message: str, estimated: Optional[int] = None, allowed: Optional[int] = None):
        super().__init__(message)
        self.estimated = estimated
        self.allowed = allowed


class QuadratureError(VerificationError, RuntimeError):
    """
    A numerical integral did not reach the requested tolerance.

    Attributes:
        achieved: The error estimate that was reached
        requested: The tolerance that was asked for
    """

    def __init__(self, message: str, achieved: float, requested: float):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested
