"""Exception types shared across the package."""


class GeocurveError(Exception):
    """Base class for all package errors."""


class DimensionError(GeocurveError, ValueError):
    """Arrays disagree in ambient dimension or grid layout."""


class NotOnSphereError(GeocurveError, ValueError):
    """A point does not have unit Euclidean norm."""


class NotTangentError(GeocurveError, ValueError):
    """A vector is not orthogonal to its base point."""


class AntipodalPointError(GeocurveError, ArithmeticError):
    """The logarithm map was requested at (numerically) antipodal points.

    ``index`` carries the offending position (node index for curves,
    sample index for samples) when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class GridMismatchError(GeocurveError, ValueError):
    """Two curves are not defined on the same time grid."""


class DegenerateCovarianceError(GeocurveError, ArithmeticError):
    """Covariance operator has no usable spectrum."""


class ConfigError(GeocurveError, ValueError):
    """Invalid experiment or algorithm configuration."""
