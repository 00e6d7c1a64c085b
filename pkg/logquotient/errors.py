"""Exception hierarchy shared by all modules and mapped to CLI exit codes."""

from __future__ import annotations


class LogQuotientError(Exception):
    """Base error for the package."""


class ValidationError(LogQuotientError, ValueError):
    """Caller input violates an invariant (CLI exit 2)."""


class ConfigError(ValidationError):
    """Malformed configuration file, override or environment variable."""


class UnachievableQuotientError(ValidationError):
    """Target log-quotients do not lie in Im(Sᵀ)."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class NumericalError(LogQuotientError, ArithmeticError):
    """Numerical failure inside an operation (CLI exit 3)."""

    def __init__(self, operation: str, message: str) -> None:
        super().__init__(f"{operation}: {message}")
        self.operation = operation


class SingularMatrixError(NumericalError):
    """Linear solve against a (numerically) singular matrix."""

    def __init__(self, operation: str, condition: float) -> None:
        super().__init__(
            operation,
            f"matrix is singular to working precision (condition number {condition:.3e})",
        )
        self.condition = condition


class ConvergenceError(NumericalError):
    """Iterative kernel failed to converge."""


class InfeasibleTotalsError(ConvergenceError):
    """Conserved totals are not attainable by any positive concentration vector."""
