"""Semidiscrete Galerkin ODE system and a classical RK4 reference integrator.

With one Lagrange space for both fields, A the mass and B the stiffness matrix on interior
dofs, the semidiscrete scheme reads

    A X' + B Y' + alpha A Y = G(X) + F(t),    B X = A Y,

so Y = A^-1 B X and X' solves [[A, B], [B, -A]] [X'; Y'] = [G + F - alpha A Y; 0].
Only homogeneous Dirichlet traces are supported here.
"""

import logging
from typing import Optional

import numpy as np

from rosenau_fem.assembly import assemble_load, assemble_nonlinear_vector
from rosenau_fem.errors import BlowUpError, InvalidArgumentError
from rosenau_fem.linalg import Factorization, compose_block
from rosenau_fem.mesh import Mesh
from rosenau_fem.stepper import MixedOperators, ProblemDefinition, SolverConfig, initialize

logger = logging.getLogger("rosenau_fem.oracle")


class SemidiscreteSystem:
    def __init__(self, problem: ProblemDefinition, ops: MixedOperators):
        if ops.space_u.degree != ops.space_p.degree:
            raise InvalidArgumentError("the semidiscrete system needs equal-order spaces")
        self.problem = problem
        self.ops = ops
        self.space = ops.space_u
        self.interior = self.space.interior_dofs
        idx = self.interior
        self.A = ops.M_uu[idx][:, idx].tocsr()
        self.B = ops.K_uu[idx][:, idx].tocsr()
        self.mass_lu = Factorization(self.A)
        self.block_lu = Factorization(compose_block([[self.A, self.B], [self.B, -self.A]]))

    @property
    def size(self) -> int:
        return len(self.interior)

    def extend(self, X: np.ndarray) -> np.ndarray:
        """Interior coefficients to a full vector with zero boundary values."""
        U = np.zeros(self.space.n_dofs)
        U[self.interior] = X
        return U

    def restrict(self, U: np.ndarray) -> np.ndarray:
        return np.asarray(U, dtype=float)[self.interior]

    def G(self, X: np.ndarray, t: float) -> np.ndarray:
        """Nonlinear term plus forcing load on interior dofs."""
        out = np.zeros(self.size)
        if self.problem.nonlinear:
            out += assemble_nonlinear_vector(self.space, self.extend(X), self.space)[self.interior]
        if self.problem.forcing is not None:
            out += assemble_load(self.space, self.problem.forcing, t)[self.interior]
        return out


def semidiscrete_rhs(X: np.ndarray, t: float, system: SemidiscreteSystem) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (system.size,):
        raise InvalidArgumentError(f"expected {system.size} interior coefficients, got shape {X.shape}")
    Y = system.mass_lu.solve(system.B @ X)
    rhs = np.concatenate([system.G(X, t) - system.problem.alpha * (system.A @ Y), np.zeros(system.size)])
    return system.block_lu.solve(rhs)[: system.size]


def closed_form_rhs(A: np.ndarray, B: np.ndarray, G: np.ndarray, X: np.ndarray, alpha: float) -> np.ndarray:
    """X' = (I + (A^-1 B)^2)^-1 A^-1 (G - alpha B X) with dense explicit inverses."""
    A_inv = np.linalg.inv(A)
    C = A_inv @ B
    return np.linalg.inv(np.eye(len(A)) + C @ C) @ A_inv @ (G - alpha * B @ X)


def rk_reference_run(
    problem: ProblemDefinition,
    mesh: Mesh,
    config: SolverConfig,
    substeps: int = 100,
    ops: Optional[MixedOperators] = None,
) -> np.ndarray:
    """Integrate the semidiscrete system to T with RK4 at step k/substeps; returns full u-coefficients."""
    if substeps < 1:
        raise InvalidArgumentError(f"substeps must be >= 1, got {substeps}")
    if not config.equal_order:
        raise InvalidArgumentError("rk_reference_run needs u_degree == p_degree")
    if ops is None:
        ops = MixedOperators(mesh, config.u_degree, config.p_degree, config.k, problem.alpha)
    system = SemidiscreteSystem(problem, ops)
    X = system.restrict(initialize(problem, ops, config).U)

    dt = config.k / substeps
    n = config.n_steps * substeps
    for i in range(n):
        t = i * dt
        k1 = semidiscrete_rhs(X, t, system)
        k2 = semidiscrete_rhs(X + 0.5 * dt * k1, t + 0.5 * dt, system)
        k3 = semidiscrete_rhs(X + 0.5 * dt * k2, t + 0.5 * dt, system)
        k4 = semidiscrete_rhs(X + dt * k3, t + dt, system)
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(X)):
            raise BlowUpError(f"reference state became non-finite at t = {t + dt:.6g}")
    logger.debug("RK4 reference: %d substeps of %.3e", n, dt)
    return system.extend(X)
