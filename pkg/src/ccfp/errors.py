"""Exception hierarchy shared by all ccfp modules."""


class CcfpError(Exception):
    """Base class for errors raised by ccfp."""


class DomainError(CcfpError, ValueError):
    """An argument lies outside the domain of the operation."""


class FactorizationError(DomainError):
    """Cholesky factorization hit a non-positive pivot.

    ``pivot`` is the 1-based index of the failing diagonal entry.
    """

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite: pivot {pivot} = {value:.6g}")


class InstanceError(CcfpError, ValueError):
    """A problem instance is structurally malformed (dimensions, missing data)."""


class ParseError(InstanceError):
    """An instance or result file could not be parsed.

    ``key`` is the dotted path of the offending entry, when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class AssumptionError(CcfpError):
    """An instance fails an assumption that the reformulation relies on."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class DigestMismatchError(CcfpError):
    """A result file does not belong to the instance it is checked against."""
