"""Gauss quadrature rules on the unit segment and the reference triangle.

The triangle rule comes from the collapsed-coordinate (Duffy) map of a
tensor-product Gauss grid onto the simplex {x, y >= 0, x + y <= 1}.  The
Jacobian factor (1 - b) of the map is absorbed into a Gauss-Jacobi rule with
weight exponent 1 in that coordinate, so no quadrature point is wasted on the
collapse and the stated polynomial exactness is exact, not approximate.

Rules are immutable and cached per requested degree.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

# Above this total degree the tensor rule sizes grow past anything the solver
# needs (degree 20 solves ask for at most 2k + 6 = 46 > 45 is clamped by
# callers); treat larger requests as a usage error.
MAX_DEGREE = 45


@dataclass(frozen=True)
class QuadratureRule:
    """Points (npts, dim) and weights (npts,) with certified exactness degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def npts(self):
        return self.weights.shape[0]


def _check_degree(degree):
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"quadrature degree must be in [0, {MAX_DEGREE}], got {degree}")


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of `degree`."""
    _check_degree(degree)
    n = max(1, (degree + 2) // 2)  # ceil((degree+1)/2)
    t, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule((t[:, None] + 1.0) / 2.0, w / 2.0, degree)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Collapsed tensor Gauss rule on the reference triangle, exact for `degree`.

    Uses Gauss-Legendre in the first collapsed coordinate and Gauss-Jacobi
    with weight (1 - b) in the second, n = ceil((degree+1)/2) points each,
    for n*n points total.  Weights sum to the reference area 1/2.
    """
    _check_degree(degree)
    n = max(1, (degree + 2) // 2)
    a, wa = np.polynomial.legendre.leggauss(n)
    b, wb = roots_jacobi(n, 1, 0)
    A, B = np.meshgrid(a, b, indexing="ij")
    x = (1.0 + A) * (1.0 - B) / 4.0
    y = (1.0 + B) / 2.0
    w = np.outer(wa, wb) / 8.0
    pts = np.column_stack([x.ravel(), y.ravel()])
    return QuadratureRule(pts, w.ravel(), degree)
