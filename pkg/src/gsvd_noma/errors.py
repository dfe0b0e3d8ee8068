"""Exception hierarchy shared by all modules."""


class GsvdNomaError(Exception):
    """Base class for package errors."""


class ConfigError(GsvdNomaError, ValueError):
    """Invalid system or experiment configuration."""


class NormalizationDivergenceError(ConfigError):
    """n = 2m: the long-term precoder power E[trace(QQ^H)] is infinite."""


class NumericalError(GsvdNomaError, ArithmeticError):
    """Base for failures of the numerical machinery."""


class DegenerateChannelError(NumericalError):
    """A channel matrix is rank deficient to working precision."""


class DomainError(NumericalError, ValueError):
    """A law or density was evaluated outside its parameter domain."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""
