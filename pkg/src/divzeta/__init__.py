"""Numerical experiments on short-interval behaviour of arithmetic error terms
and the mean square of the Riemann zeta function on the critical line."""

__version__ = "0.1.0"

from .arith_tables import ArithTable, Kind, build_table, fit_summatory, summatory_square
from .errors import (CacheInvalidError, DivzetaError, FitFailureError, InvalidArgumentError,
                     OutOfRangeError, QuadratureFailureError, ResourceLimitError)
from .error_terms import ErrorTermKind, circle_p, cusp_a, delta, delta_star, evaluate

__all__ = [
    "ArithTable", "Kind", "build_table", "fit_summatory", "summatory_square",
    "ErrorTermKind", "circle_p", "cusp_a", "delta", "delta_star", "evaluate",
    "DivzetaError", "InvalidArgumentError", "OutOfRangeError", "ResourceLimitError",
    "FitFailureError", "QuadratureFailureError", "CacheInvalidError",
]
