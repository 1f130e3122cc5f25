"""Fréchet regression and regressor selection for time-correlated curves on the sphere."""

from .curve import ManifoldCurve, TangentCurve, TimeGrid
from .errors import (AntipodalPointError, ConfigError, DegenerateCovarianceError, DimensionError,
                     GeocurveError, GridMismatchError, NotOnSphereError, NotTangentError)
from .frechet import KarcherConfig, frechet_mean_curve, frechet_mean_points, weighted_frechet_curve
from .regression import QueryBlock, RegressionConfig, RegressionModel, fit, frechet_weights, predict
from .selection import SelectionConfig, SelectionResult, estimate_lag_range, scvsa

__version__ = "0.1.0"

__all__ = [
    "AntipodalPointError", "ConfigError", "DegenerateCovarianceError", "DimensionError",
    "GeocurveError", "GridMismatchError", "KarcherConfig", "ManifoldCurve", "NotOnSphereError",
    "NotTangentError", "QueryBlock", "RegressionConfig", "RegressionModel", "SelectionConfig",
    "SelectionResult", "TangentCurve", "TimeGrid", "estimate_lag_range", "fit",
    "frechet_mean_curve", "frechet_mean_points", "frechet_weights", "predict", "scvsa",
    "weighted_frechet_curve",
]
