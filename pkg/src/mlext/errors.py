"""Exception hierarchy shared by every module."""

from __future__ import annotations


class MlextError(Exception):
    """Base class for all library errors."""


class SignatureMismatch(MlextError, ValueError):
    pass


class ModulusMismatch(MlextError, ValueError):
    pass


class CapExceeded(MlextError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(
            f"enumeration of {size} points exceeds the enumeration cap {cap} "
            "(raise it with --cap or MLEXT_CAP)"
        )


class SearchFailure(MlextError):
    """A constructive search (path, point, decomposition) came back empty."""


class NotFound(SearchFailure):
    pass


class NotConnected(SearchFailure):
    def __init__(self, message: str, source_component: int | None = None,
                 target_component: int | None = None):
        self.source_component = source_component
        self.target_component = target_component
        super().__init__(message)


class PathTooLong(NotConnected):
    pass


class BudgetExhausted(SearchFailure):
    pass


class AuditFailed(MlextError):
    def __init__(self, message: str, details: dict | None = None):
        self.details = details or {}
        super().__init__(message)


class MultilinearityViolation(AuditFailed):
    pass


class PreconditionFailed(MlextError, ValueError):
    pass


class ParseError(MlextError, ValueError):
    def __init__(self, message: str, line: int, column: int = 1, source: str = "<input>"):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{source}:{line}:{column}: {message}")
