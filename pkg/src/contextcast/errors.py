class ContextcastError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ContextcastError, ValueError):
    pass


class ParseError(ContextcastError, ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class NumericError(ContextcastError, ArithmeticError):
    pass


class FormatError(ContextcastError):
    """A checkpoint or data file is corrupt or truncated."""


class CompatibilityError(ContextcastError):
    """A checkpoint does not match the dataset it is used with."""
