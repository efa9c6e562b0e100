"""Exception types shared across the package."""


class QsepError(Exception):
    """Base class for all package-specific errors."""


class NotHermitianError(QsepError):
    """Input matrix violates the Hermitian symmetry tolerance."""


class NotPositiveDefiniteError(QsepError):
    """Matrix is not positive-definite (nonpositive Cholesky pivot)."""


class NoConvergenceError(QsepError):
    """Iterative eigensolver exceeded its sweep budget."""


class ZeroInputError(QsepError):
    """Operation undefined for a zero-magnitude complex input."""


class DimensionMismatchError(QsepError):
    """Vector and matrix dimensions do not agree."""


class InvalidParameterError(QsepError):
    """Parameter lies outside its documented domain."""


class InsufficientDataError(QsepError):
    """Not enough simulation data to run the requested estimate."""


class ConfigError(QsepError):
    """Configuration file is malformed or violates a validation rule."""
