"""Exception hierarchy shared by all simulator modules."""


class FbmcMimoError(Exception):
    """Base class for simulator errors."""


class ConfigurationError(FbmcMimoError, ValueError):
    """Invalid parameter or scenario setting."""


class ShapeError(FbmcMimoError, ValueError):
    """Array dimensions do not match the configuration."""


class SingularityError(FbmcMimoError, ArithmeticError):
    """A combiner cannot be formed because a channel vector vanishes."""


class NumericalError(FbmcMimoError, ArithmeticError):
    """Non-finite values appeared in a numerical routine."""


class DivergenceError(NumericalError):
    """Adaptive weights grew without bound."""
