"""Exception hierarchy shared across the package."""


class IquadError(Exception):
    """Base class for all errors raised by iquad."""


class InvalidOrderError(IquadError, ValueError):
    """Quadrature order outside the supported range."""


class UnsupportedRuleError(IquadError, ValueError):
    """Unknown quadrature rule kind."""


class GridTooLargeError(IquadError, ValueError):
    """Tensor-product grid would exceed the memory guard."""


class FactorizationError(IquadError, ValueError):
    """Covariance matrix is not symmetric positive definite."""


class DegenerateWeightsError(IquadError, ArithmeticError):
    """Every importance weight is zero, so no estimate can be formed."""


class ConfigError(IquadError, ValueError):
    """Invalid experiment configuration."""
