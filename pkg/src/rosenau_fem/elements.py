"""Lagrange P1/P2 reference elements written in barycentric coordinates.

The same formulas serve the interval (lambda_0 = 1 - x, lambda_1 = x) and the triangle
(lambda_0 = 1 - x - y, lambda_1 = x, lambda_2 = y). Local dofs are the vertices followed
by the edge midpoints in mesh.LOCAL_EDGES order.
"""

from functools import lru_cache
from typing import Tuple

import numpy as np

from rosenau_fem.errors import InvalidArgumentError
from rosenau_fem.mesh import LOCAL_EDGES


class ReferenceElement:
    def __init__(self, dim: int, degree: int):
        if dim not in (1, 2):
            raise InvalidArgumentError(f"unsupported dimension {dim}")
        if degree not in (1, 2):
            raise InvalidArgumentError(f"unsupported degree {degree}")
        self.dim = dim
        self.degree = degree
        self.edges: Tuple[Tuple[int, int], ...] = LOCAL_EDGES[dim] if degree == 2 else ()
        # gradients of the barycentric coordinates, (dim + 1, dim)
        self._dlam = np.vstack([-np.ones(dim), np.eye(dim)])

        vertices = np.vstack([np.zeros(dim), np.eye(dim)])
        mids = [0.5 * (vertices[a] + vertices[b]) for a, b in self.edges]
        self.nodes = np.vstack([vertices] + mids) if mids else vertices

    @property
    def node_count(self) -> int:
        return self.dim + 1 + len(self.edges)

    def __repr__(self) -> str:
        return f"ReferenceElement(dim={self.dim}, degree={self.degree})"

    def _barycentric(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.column_stack([1.0 - points.sum(axis=1), points])

    def values(self, points: np.ndarray) -> np.ndarray:
        """Shape functions at reference points, (n_points, node_count)."""
        lam = self._barycentric(points)
        if self.degree == 1:
            return lam
        cols = [lam[:, i] * (2.0 * lam[:, i] - 1.0) for i in range(self.dim + 1)]
        cols += [4.0 * lam[:, a] * lam[:, b] for a, b in self.edges]
        return np.column_stack(cols)

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """Reference gradients, (n_points, node_count, dim)."""
        lam = self._barycentric(points)
        nq = lam.shape[0]
        dl = self._dlam
        if self.degree == 1:
            return np.broadcast_to(dl, (nq,) + dl.shape).copy()
        grads = [(4.0 * lam[:, i])[:, None] * dl[i] - dl[i] for i in range(self.dim + 1)]
        grads += [
            4.0 * (lam[:, b][:, None] * dl[a] + lam[:, a][:, None] * dl[b]) for a, b in self.edges
        ]
        return np.stack(grads, axis=1)

    def hessians(self) -> np.ndarray:
        """Constant reference Hessians, (node_count, dim, dim); zero for P1."""
        dl = self._dlam
        if self.degree == 1:
            return np.zeros((self.node_count, self.dim, self.dim))
        hess = [4.0 * np.outer(dl[i], dl[i]) for i in range(self.dim + 1)]
        hess += [4.0 * (np.outer(dl[a], dl[b]) + np.outer(dl[b], dl[a])) for a, b in self.edges]
        return np.stack(hess)


@lru_cache(maxsize=None)
def reference_element(dim: int, degree: int) -> ReferenceElement:
    return ReferenceElement(dim, degree)
