"""Assembly of the mass, stiffness, load and nonlinear operators of the mixed scheme.

All element loops are vectorized over cells; local blocks are scattered through COO
triplets, so the global reduction order is fixed by the cell order.

Quadrature degrees (d = largest element degree involved):
    bilinear forms and loads   2d + 2
    nonlinear term             3d
"""

import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
import scipy.sparse as sp

from rosenau_fem.errors import InvalidArgumentError
from rosenau_fem.mesh import Mesh
from rosenau_fem.quadrature import QuadratureRule, quadrature_rule
from rosenau_fem.space import FunctionSpace, SpatialFunction, coerce_values, same_mesh

logger = logging.getLogger("rosenau_fem.assembly")

# grad f(x, t) with x of shape (n, dim) -> (n, dim)
GradientFunction = Callable[[np.ndarray, float], np.ndarray]


class CellQuadrature:
    """Physical quadrature data of a mesh for one rule."""

    def __init__(self, mesh: Mesh, degree: int):
        self.mesh = mesh
        self.rule: QuadratureRule = quadrature_rule(mesh.dim, degree)
        B = mesh.jacobians
        self.inv_b = np.linalg.inv(B)
        self.wdet = np.abs(np.linalg.det(B))[:, None] * self.rule.weights[None, :]
        x0 = mesh.points[mesh.cells[:, 0]]
        self.x = x0[:, None, :] + np.einsum("cij,qj->cqi", B, self.rule.points)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.wdet.shape

    def basis(self, space: FunctionSpace) -> np.ndarray:
        """(n_q, n_loc)"""
        return space.element.values(self.rule.points)

    def gradients(self, space: FunctionSpace) -> np.ndarray:
        """Physical gradients (n_cells, n_q, n_loc, dim)."""
        ref = space.element.gradients(self.rule.points)
        return np.einsum("cba,qkb->cqka", self.inv_b, ref)

    def evaluate(self, f: SpatialFunction, t: float) -> np.ndarray:
        nc, nq = self.shape
        vals = coerce_values(f(self.x.reshape(-1, self.mesh.dim), t), nc * nq, "function values")
        return vals.reshape(nc, nq)

    def evaluate_vector(self, f: GradientFunction, t: float) -> np.ndarray:
        nc, nq = self.shape
        vals = np.asarray(f(self.x.reshape(-1, self.mesh.dim), t), dtype=float)
        return vals.reshape(nc, nq, self.mesh.dim)

    def function_values(self, space: FunctionSpace, coefficients: np.ndarray) -> np.ndarray:
        """FE function at the quadrature points, (n_cells, n_q)."""
        return np.einsum("qk,ck->cq", self.basis(space), coefficients[space.dofmap])

    def function_gradients(self, space: FunctionSpace, coefficients: np.ndarray) -> np.ndarray:
        """(n_cells, n_q, dim)"""
        return np.einsum("cqka,ck->cqa", self.gradients(space), coefficients[space.dofmap])


@lru_cache(maxsize=8)
def cell_quadrature(mesh: Mesh, degree: int) -> CellQuadrature:
    return CellQuadrature(mesh, degree)


def _scatter_matrix(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape: Tuple[int, int]) -> sp.csr_matrix:
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    A = sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()
    A.sum_duplicates()
    return A


def _scatter_vector(local: np.ndarray, dofmap: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(dofmap.ravel(), weights=local.ravel(), minlength=n)


def _degree(*spaces: FunctionSpace) -> int:
    return max(s.degree for s in spaces)


def assemble_mass(test: FunctionSpace, trial: FunctionSpace) -> sp.csr_matrix:
    """(phi_i^test, phi_j^trial)"""
    same_mesh(test, trial)
    cq = cell_quadrature(test.mesh, 2 * _degree(test, trial) + 2)
    local = np.einsum("cq,qi,qj->cij", cq.wdet, cq.basis(test), cq.basis(trial))
    return _scatter_matrix(local, test.dofmap, trial.dofmap, (test.n_dofs, trial.n_dofs))


def assemble_stiffness(test: FunctionSpace, trial: FunctionSpace) -> sp.csr_matrix:
    """(grad phi_i^test, grad phi_j^trial)"""
    same_mesh(test, trial)
    cq = cell_quadrature(test.mesh, 2 * _degree(test, trial) + 2)
    local = np.einsum("cq,cqia,cqja->cij", cq.wdet, cq.gradients(test), cq.gradients(trial))
    return _scatter_matrix(local, test.dofmap, trial.dofmap, (test.n_dofs, trial.n_dofs))


def assemble_load(space: FunctionSpace, f: SpatialFunction, t: float = 0.0) -> np.ndarray:
    """(f(., t), phi_j)"""
    cq = cell_quadrature(space.mesh, 2 * space.degree + 2)
    local = np.einsum("cq,cq,qi->ci", cq.wdet, cq.evaluate(f, t), cq.basis(space))
    return _scatter_vector(local, space.dofmap, space.n_dofs)


def assemble_gradient_load(space: FunctionSpace, grad_f: GradientFunction, t: float = 0.0) -> np.ndarray:
    """(grad f(., t), grad phi_j); right-hand side of the Ritz projection."""
    cq = cell_quadrature(space.mesh, 2 * space.degree + 2)
    local = np.einsum("cqa,cqia->ci", cq.wdet[:, :, None] * cq.evaluate_vector(grad_f, t), cq.gradients(space))
    return _scatter_vector(local, space.dofmap, space.n_dofs)


def flux(u: np.ndarray) -> np.ndarray:
    """Componentwise g_i(u) = -(u + u^2/2)."""
    return -(u + 0.5 * u * u)


def _nonlinear_data(space_u: FunctionSpace, U: np.ndarray, space_test: FunctionSpace):
    same_mesh(space_u, space_test)
    U = coerce_values(U, space_u.n_dofs, "U")
    cq = cell_quadrature(space_u.mesh, 3 * _degree(space_u, space_test))
    uq = cq.function_values(space_u, U)
    # 1 . grad chi_j
    div_dir = cq.gradients(space_test).sum(axis=-1)
    return cq, uq, div_dir


def assemble_nonlinear_vector(space_u: FunctionSpace, U: np.ndarray, space_test: FunctionSpace) -> np.ndarray:
    """N_j = int (u_h + u_h^2/2)(1 . grad chi_j) dx = -(g(u_h), grad chi_j)."""
    cq, uq, div_dir = _nonlinear_data(space_u, U, space_test)
    local = np.einsum("cq,cqj->cj", cq.wdet * -flux(uq), div_dir)
    return _scatter_vector(local, space_test.dofmap, space_test.n_dofs)


def assemble_nonlinear_jacobian(space_u: FunctionSpace, U: np.ndarray, space_test: FunctionSpace) -> sp.csr_matrix:
    """dN_j/dU_k = int (1 + u_h) phi_k (1 . grad chi_j) dx."""
    cq, uq, div_dir = _nonlinear_data(space_u, U, space_test)
    local = np.einsum("cq,cqj,qk->cjk", cq.wdet * (1.0 + uq), div_dir, cq.basis(space_u))
    return _scatter_matrix(local, space_test.dofmap, space_u.dofmap, (space_test.n_dofs, space_u.n_dofs))


def assemble_convection(space_u: FunctionSpace, space_test: FunctionSpace) -> sp.csr_matrix:
    """int phi_k (1 . grad chi_j) dx, the nonlinear Jacobian at U = 0."""
    return assemble_nonlinear_jacobian(space_u, np.zeros(space_u.n_dofs), space_test)


def apply_dirichlet(
    A: sp.spmatrix,
    rhs: np.ndarray,
    constrained: np.ndarray,
    values: np.ndarray,
) -> Tuple[sp.csr_matrix, np.ndarray]:
    """Symmetric elimination of constrained dofs.

    Constrained rows and columns are zeroed, the diagonal set to 1 and the rhs set to
    the prescribed values; the eliminated columns are moved to the rhs.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise InvalidArgumentError(f"apply_dirichlet needs a square matrix, got {A.shape}")
    rhs = coerce_values(rhs, n, "rhs").copy()
    constrained = np.asarray(constrained, dtype=np.int64).ravel()
    if constrained.size and (constrained.min() < 0 or constrained.max() >= n):
        raise InvalidArgumentError("constrained dofs out of range")
    values = coerce_values(values, constrained.size, "dirichlet values")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("dirichlet values must be finite")

    lifted = np.zeros(n)
    lifted[constrained] = values
    rhs -= A @ lifted

    keep = np.ones(n)
    keep[constrained] = 0.0
    D = sp.diags(keep)
    A = (D @ A @ D + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    A.sum_duplicates()
    rhs[constrained] = values
    return A, rhs
