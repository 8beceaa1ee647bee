"""Exception types raised by geocfar."""


class GeoCFARError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(GeoCFARError, ValueError):
    pass


class NotPositiveDefinite(GeoCFARError, ValueError):
    """A matrix expected to be Hermitian positive definite is not."""


class RankDeficient(GeoCFARError, ValueError):
    pass


class ZeroSnapshot(GeoCFARError, ValueError):
    """An all-zero snapshot was given where a nonzero one is required."""


class EigenDecompositionError(GeoCFARError, ArithmeticError):
    """The Hermitian eigensolver failed to converge."""


class DomainError(GeoCFARError, ValueError):
    """Input lies outside the domain of a function."""


class ConfigError(GeoCFARError, ValueError):
    """Invalid experiment or detector configuration."""
