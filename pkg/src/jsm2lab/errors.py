"""Exception types shared across the package."""


class Jsm2LabError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimensionError(Jsm2LabError, ValueError):
    """Array shapes or set sizes do not match the problem dimensions."""


class InvalidRangeError(Jsm2LabError, ValueError):
    """A numeric argument lies outside its allowed range."""


class InvalidParameterError(Jsm2LabError, ValueError):
    """A parameter combination violates a stated precondition."""


class DomainError(Jsm2LabError, ValueError):
    """A closed-form expression was evaluated outside its domain."""


class DeltaAdmissibilityError(DomainError):
    """The typicality slack delta violates 0 < delta < (1 - K/M) * energy."""


class RankDeficientError(Jsm2LabError, ArithmeticError):
    """A sensing block has numerical column rank below K."""


class EnumerationBudgetError(Jsm2LabError, RuntimeError):
    """C(N, K) exceeds the configured exhaustive-enumeration cap."""


class ConfigError(Jsm2LabError, ValueError):
    """Command-line or config-file input could not be validated."""
