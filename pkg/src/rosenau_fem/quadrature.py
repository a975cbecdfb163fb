"""Quadrature rules on the reference interval [0, 1] and triangle (0,0), (1,0), (0,1)."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from rosenau_fem.errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray  # (n_points, dim) reference coordinates
    weights: np.ndarray  # (n_points,), sum = reference measure
    degree: int

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.weights.shape[0])


def _n_points(degree: int) -> int:
    return max(1, (degree + 2) // 2)


@lru_cache(maxsize=None)
def quadrature_rule(dim: int, degree: int) -> QuadratureRule:
    """Gauss rule exact for polynomials of total degree <= degree.

    Triangles use the collapsed (Duffy) product of Gauss-Jacobi and Gauss-Legendre points.
    """
    if degree < 0:
        raise InvalidArgumentError(f"quadrature degree must be >= 0, got {degree}")
    n = _n_points(degree)
    t, w = roots_legendre(n)
    x = 0.5 * (t + 1.0)
    wx = 0.5 * w

    if dim == 1:
        points, weights = x[:, None], wx
    elif dim == 2:
        # int_0^1 f(u) (1 - u) du with Jacobi weight (1 - s)^1 on [-1, 1]
        s, ws = roots_jacobi(n, 1.0, 0.0)
        u = 0.5 * (s + 1.0)
        wu = 0.25 * ws
        U, V = np.meshgrid(u, x, indexing="ij")
        WU, WV = np.meshgrid(wu, wx, indexing="ij")
        points = np.column_stack([U.ravel(), ((1.0 - U) * V).ravel()])
        weights = (WU * WV).ravel()
    else:
        raise InvalidArgumentError(f"unsupported dimension {dim}")

    points = np.ascontiguousarray(points)
    points.flags.writeable = False
    weights = np.ascontiguousarray(weights)
    weights.flags.writeable = False
    return QuadratureRule(points, weights, degree)
