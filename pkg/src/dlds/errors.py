"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes do not agree."""


class DomainError(ValueError):
    """An argument is outside the domain of the operation (NaN, negative radius, ...)."""


class DivergenceError(ArithmeticError):
    """A numerical rollout produced non-finite values.

    Attributes
    ----------
    step : int
        Index of the first step whose state was non-finite.
    """

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class ParseError(ValueError):
    """Malformed input file (CSV or config)."""


class IntegrityError(ValueError):
    """A model archive is truncated or corrupted."""


class VersionError(IntegrityError):
    """A model archive was written by an unsupported format version."""
