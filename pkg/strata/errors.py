"""Exceptions shared by every strata module."""


class StrataError(Exception):
    """Base exception for strata operations."""

    exit_code = 2
    status_code = 422


class InvalidArgumentError(StrataError, ValueError):
    """Raised for invalid or infeasible inputs."""


class InsufficientResultsError(StrataError):
    """Raised when a layer is decoded from fewer than k_j results."""


class IncompleteJobError(StrataError):
    """Raised when a job cannot be assembled because a layer is missing."""

    status_code = 409


class SearchSpaceTooLargeError(StrataError):
    """Raised when an exhaustive oracle would exceed its search-space cap."""


class NumericalFailureError(StrataError, ArithmeticError):
    """Raised for singular decode systems and non-convergent integrals."""

    exit_code = 3
    status_code = 500

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class HarnessTimeoutError(StrataError, TimeoutError):
    """Raised when a layer is still undecoded at the harness deadline."""

    exit_code = 3
    status_code = 504
