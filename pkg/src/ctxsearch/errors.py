"""Exception types shared across the package."""


class CtxSearchError(Exception):
    """Base class for every error this package raises on purpose."""


class ValidationError(CtxSearchError):
    """Input violates a documented contract or invariant."""


class ParseError(CtxSearchError):
    """A file or payload does not match its documented format."""

    def __init__(self, message: str, *, line: int | None = None, record: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        elif record is not None:
            message = f"{message} (record {record})"
        super().__init__(message)
        self.line = line
        self.record = record


class StorageError(CtxSearchError):
    """A store write failed; the record is not persisted."""


class SessionStateError(CtxSearchError):
    """Operation not allowed in the session's current state."""


class AdapterError(CtxSearchError):
    """The search backend failed or is unreachable."""


class HarnessError(CtxSearchError):
    """A simulation run could not be carried out."""
