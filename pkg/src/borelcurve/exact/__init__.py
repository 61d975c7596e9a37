"""Exact arithmetic layer: Gaussian rationals, z-polynomials, rational
functions, bivariate curve polynomials, and the linear algebra over them."""

from .gaussrat import GaussianRational, gr, I, ONE, ZERO
from .polynomial import Poly, X
from .ratfunc import RatFunc, RF_ONE, RF_Z, RF_ZERO
from .wpoly import WPoly, bareiss_determinant
from .curve import CurvePoly, DegenerateCurveError
from .linalg import nullspace, rref, solve_square

__all__ = [
    "GaussianRational", "gr", "I", "ONE", "ZERO",
    "Poly", "X",
    "RatFunc", "RF_ONE", "RF_Z", "RF_ZERO",
    "WPoly", "bareiss_determinant",
    "CurvePoly", "DegenerateCurveError",
    "nullspace", "rref", "solve_square",
]
