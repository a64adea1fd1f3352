"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad masses, ...)."""


class ResourceLimitError(RuntimeError):
    """An operation would exceed a configured size cap."""


class ParseError(InvalidInputError):
    """A text literal could not be parsed; carries the offending line number."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
