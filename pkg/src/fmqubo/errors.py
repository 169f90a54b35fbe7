"""Exception types shared across the package."""


class FmQuboError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(FmQuboError, ValueError):
    """A vector or matrix has the wrong length/shape for the model."""


class ValidationError(FmQuboError, ValueError):
    """An input violates a documented invariant."""


class EncodingRangeError(FmQuboError, ValueError):
    """A value cannot be represented by the requested binary encoding."""


class CapacityError(FmQuboError, ValueError):
    """A problem is too large for an exhaustive routine."""


class TrainingDivergedError(FmQuboError, RuntimeError):
    """Training produced a non-finite loss."""


class UnknownCombinationError(FmQuboError, LookupError):
    """A black-box query asked for a combination with no stored response."""


class ParseError(FmQuboError, ValueError):
    """A text input could not be parsed.

    Carries the 1-based line number when the source is line-oriented.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConstantInputError(FmQuboError, ValueError):
    """Correlation requested on a constant sequence (undefined)."""
