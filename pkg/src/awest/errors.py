"""Exception types shared across the package."""


class AwestError(Exception):
    """Base class for package errors."""


class ValidationError(AwestError, ValueError):
    """Input violates a structural invariant (shapes, weights, parameters)."""


class PreconditionError(AwestError, ValueError):
    """A numeric precondition of a bound or estimator does not hold."""


class UnsupportedPrefixError(AwestError, KeyError):
    """Requested prefix is not in the support of the path measure."""

    def __str__(self):
        return "unsupported prefix: " + ", ".join(str(a) for a in self.args)


class StateSpaceTooLarge(AwestError, MemoryError):
    """Exhaustive enumeration would exceed the size guard."""
