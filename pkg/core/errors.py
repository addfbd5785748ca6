"""
isacbeam error hierarchy.

Every failure raised by the library derives from IsacError so the CLI can map
it onto an exit code. Solver trouble is NOT raised here: conic.solve reports it
through SolverResult.status and the caller decides what it means.

Exit code mapping (app.py):
    InfeasibleError (incl. SearchRangeError)  -> 2
    any other IsacError                        -> 1
"""

from typing import Any, Optional


class IsacError(Exception):
    """Base class for all isacbeam errors."""

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form written to stderr by the CLI."""
        return {"error": type(self).__name__, "message": str(self)}


class DomainError(IsacError, ValueError):
    """Input outside the domain of an operation (bad index, zero distance, ...)."""


class DimensionError(DomainError):
    """Array dimensions do not admit the requested construction (e.g. N <= K_E for ZF)."""


class NumericalError(IsacError, ArithmeticError):
    """A numerical result could not be turned into a valid design."""


class ExtractionError(NumericalError):
    """
    Rank-one extraction produced a point violating one of its guarantees.

    Attributes:
        clause: Name of the violated property (e.g. "sum_preservation")
        details: Measured values that triggered the failure
    """

    def __init__(self, clause: str, message: str, details: Optional[dict[str, float]] = None):
        super().__init__(f"{clause}: {message}")
        self.clause = clause
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        payload = super().to_dict()
        payload["clause"] = self.clause
        return payload


class InfeasibleError(IsacError):
    """
    The requested secrecy rate cannot be met.

    Attributes:
        max_rate: Maximum achievable secrecy rate R* (bps/Hz) when known
    """

    def __init__(self, message: str, max_rate: Optional[float] = None):
        super().__init__(message)
        self.max_rate = max_rate

    def to_dict(self) -> dict[str, Any]:
        payload = super().to_dict()
        if self.max_rate is not None:
            payload["max_rate_bpshz"] = self.max_rate
        return payload


class SearchRangeError(InfeasibleError):
    """Every point of the gamma_E search was infeasible."""


class ConfigError(IsacError, ValueError):
    """Scenario or settings failed validation."""


class CandidateBudgetError(ConfigError):
    """Brute-force enumeration would exceed its candidate budget."""


__all__ = [
    "IsacError",
    "DomainError",
    "DimensionError",
    "NumericalError",
    "ExtractionError",
    "InfeasibleError",
    "SearchRangeError",
    "ConfigError",
    "CandidateBudgetError",
]
