"""Exception types raised across the package."""


class GaussCurvError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(GaussCurvError, ValueError):
    """A parameter lies outside its admissible domain."""


class GridError(InvalidParameterError):
    """A grid is too small or otherwise unusable."""


class DivergentIntegralError(GaussCurvError, ArithmeticError):
    """An improper integral required to be finite was found to diverge."""


class QuadratureError(GaussCurvError, ArithmeticError):
    """Two quadrature refinement levels disagree beyond tolerance."""


class InadmissibleBetaError(InvalidParameterError):
    """The inverse temperature lies outside the admissible open interval."""


class SignMismatchError(InvalidParameterError):
    """The sign of beta is incompatible with the sign of the curvature."""


class NotFittedError(GaussCurvError, AttributeError):
    """An estimator was used before ``fit``."""
