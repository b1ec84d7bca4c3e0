"""Exception types shared across the package."""


class PosbootError(Exception):
    """Base class for all package errors."""


class LedgerError(PosbootError):
    """A transfer record is invalid (negative amount, overdraft, bad ids)."""


class DegenerateProfileError(PosbootError):
    """Scaled-stake normalization is undefined: sum of omega/theta is ~0."""


class MetricDomainError(PosbootError):
    """A metric's preconditions are violated (bad shares, no qualifying set)."""


class ParamError(PosbootError):
    """Invalid or infeasible parameters for a generator, analyzer, or simulation."""
