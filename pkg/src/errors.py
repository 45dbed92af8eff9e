"""Exception hierarchy shared by every stabkit module.

Library code raises these; the CLI maps them to exit code 2 and prints
`error: <category>: <detail>`.
"""

from typing import Any, Optional, Sequence


class StabkitError(Exception):
    """Base class for all library errors."""

    category = "runtime"


class InvalidArgumentError(StabkitError, ValueError):
    """Raised when an argument violates an operation's precondition."""

    category = "invalid-argument"


class SizeLimitError(StabkitError):
    """Raised when a dense oracle or brute force is asked for too large a size."""

    category = "size-limit"


class FactorizationError(StabkitError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""

    category = "factorization"

    def __init__(self, pivot: int, message: Optional[str] = None):
        self.pivot = pivot
        super().__init__(
            message or f"matrix is not positive definite (failing pivot {pivot})"
        )


class ConvergenceError(StabkitError):
    """Raised when the eigensolver exhausts its budget.

    Carries whatever was extracted before the failure so callers can inspect
    or reuse it.
    """

    category = "convergence"

    def __init__(
        self,
        message: str,
        partial_basis: Any = None,
        residuals: Sequence[float] = (),
    ):
        self.partial_basis = partial_basis
        self.residuals = list(residuals)
        super().__init__(message)


class NumericalError(StabkitError):
    """Raised when a floating-point guard on a provable quantity trips."""

    category = "numerical"


class ConfigError(StabkitError):
    """Raised for invalid JSON configs or CLI overrides."""

    category = "config"


class CacheError(StabkitError):
    """Raised when a cached subspace sidecar cannot be read back."""

    category = "cache"


class OutputExistsError(StabkitError):
    """Raised when a result file exists and overwriting was not forced."""

    category = "output-exists"


class PropertyCheckError(StabkitError):
    """Raised when the property suite finishes with failing checks.

    Carries the rendered pass/fail table so the CLI can still print it.
    """

    category = "check"

    def __init__(self, message: str, table: str = ""):
        self.table = table
        super().__init__(message)
