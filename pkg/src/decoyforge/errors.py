"""Exception hierarchy shared across the package."""


class DecoyForgeError(Exception):
    """Base class for all package errors."""


class InvalidSourceError(DecoyForgeError, ValueError):
    """A photon-number distribution was requested with out-of-range parameters."""


class DegenerateBoundError(DecoyForgeError, ArithmeticError):
    """A bound formula hit a non-positive denominator.

    Raised when the sources are degenerate (e.g. two equal intensities) or the
    structural conditions the formula relies on do not hold.
    """


class ConditionViolation(DecoyForgeError):
    """The source conditions required by an estimator are violated."""


class ConfigError(DecoyForgeError, ValueError):
    """Malformed scenario configuration.

    Attributes:
        field: name of the offending key, if known.
        line: 1-based line number in the config text, if known.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
