"""Spline regression with automatic knot selection.

Fits B-spline regressions in which the number and position of knots are
chosen from the data: a dense set of candidate knots is thinned by an
iteratively reweighted ridge penalty on high-order coefficient differences,
and the surviving knots are refit without penalty. Supports Gaussian,
Poisson and Binomial responses.
"""

__version__ = "0.1.0"

from .basis import DesignMatrix, KnotVector, build_design, eval_basis, make_knots
from .errors import (
    AsplineError,
    DataError,
    DivergenceError,
    NumericalError,
    RankDeficientBasisError,
    SingularMatrixError,
)
from .fit import AsplineFit, fit_aspline
from .glm import Family, binomial, gaussian, get_family, poisson
from .linalg import BandedSymMatrix, CholeskyFactor
from .selection import FitResult, aic, bic, ebic0, select_best
from .simulation import ScenarioConfig, run_scenario
from .solver import ARConfig, ARState, DesignProducts, LambdaPath, default_lambda_grid

__all__ = [
    "__version__",
    "AsplineError",
    "AsplineFit",
    "ARConfig",
    "ARState",
    "BandedSymMatrix",
    "CholeskyFactor",
    "DataError",
    "DesignMatrix",
    "DesignProducts",
    "DivergenceError",
    "Family",
    "FitResult",
    "KnotVector",
    "LambdaPath",
    "NumericalError",
    "RankDeficientBasisError",
    "ScenarioConfig",
    "SingularMatrixError",
    "aic",
    "bic",
    "binomial",
    "build_design",
    "default_lambda_grid",
    "ebic0",
    "eval_basis",
    "fit_aspline",
    "gaussian",
    "get_family",
    "make_knots",
    "poisson",
    "run_scenario",
    "select_best",
]
