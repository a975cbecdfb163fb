import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from rosenau_fem.elements import ReferenceElement, reference_element
from rosenau_fem.errors import InvalidArgumentError
from rosenau_fem.mesh import Mesh

logger = logging.getLogger("rosenau_fem.space")

# f(x, t) with x of shape (n, dim) -> (n,)
SpatialFunction = Callable[[np.ndarray, float], np.ndarray]


class FunctionSpace:
    """Continuous Lagrange space of degree 1 or 2 on a mesh.

    Global dofs: mesh vertices first (same numbering as the mesh), then one dof per
    mesh edge for P2.
    """

    def __init__(self, mesh: Mesh, degree: int):
        self.mesh = mesh
        self.element: ReferenceElement = reference_element(mesh.dim, degree)

    @property
    def degree(self) -> int:
        return self.element.degree

    @cached_property
    def dofmap(self) -> np.ndarray:
        """(n_cells, node_count) global dof of each local dof."""
        if self.degree == 1:
            dm = self.mesh.cells.copy()
        else:
            dm = np.hstack([self.mesh.cells, self.mesh.n_nodes + self.mesh.cell_edges])
        dm.flags.writeable = False
        return dm

    @property
    def n_dofs(self) -> int:
        if self.degree == 1:
            return self.mesh.n_nodes
        return self.mesh.n_nodes + len(self.mesh.edges)

    @cached_property
    def dof_coords(self) -> np.ndarray:
        pts = self.mesh.points
        if self.degree == 2:
            e = self.mesh.edges
            pts = np.vstack([pts, 0.5 * (pts[e[:, 0]] + pts[e[:, 1]])])
        pts = np.array(pts)
        pts.flags.writeable = False
        return pts

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        """Constrained (Dirichlet) dofs: marked boundary vertices plus boundary edge midpoints."""
        dofs = self.mesh.boundary_nodes
        if self.degree == 2 and self.mesh.dim == 2:
            dofs = np.concatenate([dofs, self.mesh.n_nodes + self.mesh.boundary_edges])
        dofs = np.unique(dofs)
        dofs.flags.writeable = False
        return dofs

    @cached_property
    def interior_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.flatnonzero(mask)

    def interpolate(self, f: SpatialFunction, t: float = 0.0) -> "FiniteElementFunction":
        return FiniteElementFunction(self, coerce_values(f(self.dof_coords, t), self.n_dofs, "interpolant"))

    def __repr__(self) -> str:
        return f"FunctionSpace(P{self.degree}, dim={self.mesh.dim}, n_dofs={self.n_dofs})"


def same_mesh(a: FunctionSpace, b: FunctionSpace) -> None:
    if a.mesh is not b.mesh:
        raise InvalidArgumentError("function spaces live on different meshes")


@dataclass(frozen=True, eq=False)
class FiniteElementFunction:
    space: FunctionSpace
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (self.space.n_dofs,):
            raise InvalidArgumentError(
                f"expected {self.space.n_dofs} coefficients, got shape {coeffs.shape}"
            )
        object.__setattr__(self, "coefficients", coeffs)

    def vertex_values(self) -> np.ndarray:
        """Nodal values at the mesh vertices (Lagrange property)."""
        return self.coefficients[: self.space.mesh.n_nodes]


def coerce_values(values: np.ndarray, n: int, what: Optional[str] = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise InvalidArgumentError(f"{what or 'values'}: expected shape ({n},), got {arr.shape}")
    return arr
