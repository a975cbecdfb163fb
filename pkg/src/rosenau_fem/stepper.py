"""Backward Euler time stepping of the mixed system with a Newton solve per step.

Unknowns are stacked as X = [U; P]. With N(U) from `assemble_nonlinear_vector` tested on the
p-space and F^m the load at t^m, each step solves

    K_u U - M_up P                                                             = 0
    (1/k) M_pu (U - U_old) + (1/k) K_p (P - P_old) + alpha M_p P - N(U) - F^m = 0

on the free dofs, with both Dirichlet traces evaluated at t^m. The first row block is tested
on the u-space and the second on the p-space, so the coupling blocks are mass matrices.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Callable, List, Literal, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator

from rosenau_fem.assembly import (
    GradientFunction,
    apply_dirichlet,
    assemble_gradient_load,
    assemble_load,
    assemble_mass,
    assemble_nonlinear_jacobian,
    assemble_nonlinear_vector,
    assemble_stiffness,
)
from rosenau_fem.errors import InvalidArgumentError, SingularMatrixError, StepFailure
from rosenau_fem.linalg import Factorization, SparseMatrix, compose_block, write_matrix_market
from rosenau_fem.mesh import Mesh
from rosenau_fem.space import FiniteElementFunction, FunctionSpace, SpatialFunction, coerce_values

logger = logging.getLogger("rosenau_fem.stepper")


def _zero(x: np.ndarray, t: float = 0.0) -> np.ndarray:
    return np.zeros(len(x))


@dataclass(frozen=True)
class ProblemDefinition:
    """Data of one initial-boundary value problem. Callables take (x, t), x of shape (n, dim)."""

    alpha: float
    dim: int
    initial_u: SpatialFunction
    dirichlet_u: SpatialFunction = _zero
    dirichlet_p: SpatialFunction = _zero
    forcing: Optional[SpatialFunction] = None
    initial_grad_u: Optional[GradientFunction] = None
    initial_p: Optional[SpatialFunction] = None
    nonlinear: bool = True

    def __post_init__(self) -> None:
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidArgumentError(f"alpha must be > 0, got {self.alpha}")
        if self.dim not in (1, 2):
            raise InvalidArgumentError(f"unsupported dimension {self.dim}")


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    k: Annotated[float, Field(gt=0.0)]
    T: Annotated[float, Field(gt=0.0)]
    newton_tol: Annotated[float, Field(gt=0.0)] = 1e-11
    newton_max_iter: Annotated[int, Field(ge=1)] = 25
    picard_max_iter: Annotated[int, Field(ge=0)] = 50
    u_degree: Literal[1, 2] = 2
    p_degree: Literal[1, 2] = 1
    initializer: Literal["interpolate", "ritz"] = "interpolate"
    p_initializer: Literal["discrete", "interpolate"] = "discrete"
    jacobian: Literal["newton", "chord"] = "newton"

    @model_validator(mode="after")
    def _whole_number_of_steps(self) -> "SolverConfig":
        n = round(self.T / self.k)
        if n < 1 or abs(n * self.k - self.T) > 1e-9 * self.T:
            raise ValueError(f"T = {self.T} is not an integer multiple of k = {self.k}")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.k))

    @property
    def equal_order(self) -> bool:
        return self.u_degree == self.p_degree


@dataclass(frozen=True, eq=False)
class State:
    m: int
    t: float
    U: np.ndarray
    P: np.ndarray

    def __post_init__(self) -> None:
        for name in ("U", "P"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def X(self) -> np.ndarray:
        return np.concatenate([self.U, self.P])


@dataclass
class EnergyTrace:
    """Per time level: ||U||^2 + ||P||^2 and ||U||_1^2, both through consistent mass matrices."""

    energy: List[float] = field(default_factory=list)
    h1_sq: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.energy)

    def append(self, energy: float, h1_sq: float) -> None:
        self.energy.append(float(energy))
        self.h1_sq.append(float(h1_sq))

    def increments(self) -> np.ndarray:
        return np.diff(np.asarray(self.energy))

    def is_non_increasing(self, rtol: float = 1e-10) -> bool:
        if len(self.energy) < 2:
            return True
        slack = rtol * max(self.energy[0], np.finfo(float).tiny)
        return bool(np.all(self.increments() <= slack))


@dataclass
class StepReport:
    m: int
    iterations: int
    residuals: List[float]
    method: str = "newton"


class MixedOperators:
    """Time-independent blocks of the scheme for one mesh, pair of spaces, k and alpha."""

    def __init__(self, mesh: Mesh, u_degree: int, p_degree: int, k: float, alpha: float):
        self.mesh = mesh
        self.k = k
        self.alpha = alpha
        self.space_u = FunctionSpace(mesh, u_degree)
        self.space_p = FunctionSpace(mesh, p_degree)
        su, sp_ = self.space_u, self.space_p

        self.M_uu = assemble_mass(su, su)
        self.K_uu = assemble_stiffness(su, su)
        self.M_pp = assemble_mass(sp_, sp_)
        self.K_pp = assemble_stiffness(sp_, sp_)
        self.M_up = assemble_mass(su, sp_)
        self.M_pu = assemble_mass(sp_, su)
        self.A_pu = assemble_stiffness(sp_, su)

        # rows: p = -lap u tested on the u-space, then the evolution equation tested on the p-space
        self.L: SparseMatrix = compose_block(
            [[self.K_uu, -self.M_up], [self.M_pu / k, self.K_pp / k + alpha * self.M_pp]]
        )
        self.n_u = su.n_dofs
        self.n_p = sp_.n_dofs
        self.constrained = np.concatenate([su.boundary_dofs, self.n_u + sp_.boundary_dofs])
        logger.debug(
            "Operators: %d u-dofs (P%d), %d p-dofs (P%d), %d constrained, nnz(L)=%d",
            self.n_u, u_degree, self.n_p, p_degree, len(self.constrained), self.L.nnz,
        )

    def split(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return X[: self.n_u], X[self.n_u :]

    def traces(self, problem: ProblemDefinition, t: float) -> np.ndarray:
        su, sp_ = self.space_u, self.space_p
        vu = coerce_values(problem.dirichlet_u(su.dof_coords[su.boundary_dofs], t), len(su.boundary_dofs), "u trace")
        vp = coerce_values(problem.dirichlet_p(sp_.dof_coords[sp_.boundary_dofs], t), len(sp_.boundary_dofs), "p trace")
        return np.concatenate([vu, vp])

    def known_rhs(self, problem: ProblemDefinition, X_old: np.ndarray, t: float) -> np.ndarray:
        """The U-independent part [0; (M_pu U_old + K_pp P_old)/k + F(t)]."""
        U_old, P_old = self.split(X_old)
        b_p = (self.M_pu @ U_old + self.K_pp @ P_old) / self.k
        if problem.forcing is not None:
            b_p = b_p + assemble_load(self.space_p, problem.forcing, t)
        return np.concatenate([np.zeros(self.n_u), b_p])

    def nonlinear(self, problem: ProblemDefinition, U: np.ndarray) -> np.ndarray:
        """N(U) tested on the p-space."""
        if not problem.nonlinear:
            return np.zeros(self.n_p)
        return assemble_nonlinear_vector(self.space_u, U, self.space_p)

    def residual(self, problem: ProblemDefinition, X: np.ndarray, X_old: np.ndarray, t: float) -> np.ndarray:
        """Step residual on all rows (constrained rows included)."""
        R = self.L @ X - self.known_rhs(problem, X_old, t)
        R[self.n_u :] -= self.nonlinear(problem, X[: self.n_u])
        return R

    def jacobian(self, problem: ProblemDefinition, U: np.ndarray) -> SparseMatrix:
        if not problem.nonlinear:
            return self.L
        J_N = assemble_nonlinear_jacobian(self.space_u, U, self.space_p)
        lower = sp.bmat([[sp.csr_matrix((self.n_u, self.n_u)), None], [J_N, sp.csr_matrix((self.n_p, self.n_p))]], format="csr")
        return (self.L - lower).tocsr()

    def energy(self, U: np.ndarray, P: np.ndarray) -> Tuple[float, float]:
        mu = float(U @ (self.M_uu @ U))
        return mu + float(P @ (self.M_pp @ P)), mu + float(U @ (self.K_uu @ U))


def build_operators(mesh: Mesh, config: SolverConfig, alpha: float) -> MixedOperators:
    return MixedOperators(mesh, config.u_degree, config.p_degree, config.k, alpha)


def initialize(problem: ProblemDefinition, ops: MixedOperators, config: SolverConfig) -> State:
    """State at m = 0: U^0 by interpolation or Ritz projection, P^0 from the discrete p-equation
    (or interpolation of -lap u_0)."""
    su, sp_ = ops.space_u, ops.space_p

    if config.initializer == "ritz":
        if problem.initial_grad_u is None:
            raise InvalidArgumentError("the ritz initializer needs the gradient of u_0")
        b = assemble_gradient_load(su, problem.initial_grad_u, 0.0)
        trace = coerce_values(problem.dirichlet_u(su.dof_coords[su.boundary_dofs], 0.0), len(su.boundary_dofs))
        K, b = apply_dirichlet(ops.K_uu, b, su.boundary_dofs, trace)
        U0 = Factorization(K).solve(b)
    else:
        U0 = su.interpolate(problem.initial_u, 0.0).coefficients

    if config.p_initializer == "interpolate":
        if problem.initial_p is None:
            raise InvalidArgumentError("the interpolate p-initializer needs -lap u_0")
        P0 = sp_.interpolate(problem.initial_p, 0.0).coefficients
    else:
        trace = coerce_values(problem.dirichlet_p(sp_.dof_coords[sp_.boundary_dofs], 0.0), len(sp_.boundary_dofs))
        M, b = apply_dirichlet(ops.M_pp, ops.A_pu @ U0, sp_.boundary_dofs, trace)
        try:
            P0 = Factorization(M).solve(b)
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"p mass matrix is singular: {exc}", exc.pivot_row) from exc

    return State(0, 0.0, U0, P0)


class BackwardEulerStepper:
    def __init__(
        self,
        problem: ProblemDefinition,
        ops: MixedOperators,
        config: SolverConfig,
        jacobian_dump: Optional[Path] = None,
    ):
        self.problem = problem
        self.ops = ops
        self.config = config
        self.jacobian_dump = jacobian_dump
        self._picard: Optional[Factorization] = None

    def _converged(self, r: float, scale: float) -> bool:
        return r <= self.config.newton_tol * scale

    def _free_residual(self, X: np.ndarray, X_old: np.ndarray, t: float) -> np.ndarray:
        R = self.ops.residual(self.problem, X, X_old, t)
        R[self.ops.constrained] = 0.0
        return R

    def _newton(self, X: np.ndarray, X_old: np.ndarray, t: float, scale: float, m: int) -> Tuple[np.ndarray, List[float], bool]:
        ops = self.ops
        history: List[float] = []
        lu: Optional[Factorization] = None
        zeros = np.zeros(len(ops.constrained))
        for it in range(self.config.newton_max_iter):
            R = self._free_residual(X, X_old, t)
            if lu is None or self.config.jacobian == "newton":
                J = ops.jacobian(self.problem, X[: ops.n_u])
                if self.jacobian_dump is not None:
                    write_matrix_market(J, self.jacobian_dump)
                    self.jacobian_dump = None
                J, _ = apply_dirichlet(J, np.zeros(len(X)), ops.constrained, zeros)
                lu = Factorization(J)
            # R vanishes on constrained rows, so corrections keep the traces
            X = X + lu.solve(-R)
            r = float(np.max(np.abs(self._free_residual(X, X_old, t))))
            history.append(r)
            logger.debug("step %d newton %d: |R| = %.3e", m, it + 1, r)
            if not np.isfinite(r):
                return X, history, False
            if self._converged(r, scale):
                return X, history, True
        return X, history, False

    def _picard_iterate(self, X: np.ndarray, X_old: np.ndarray, t: float, scale: float, m: int) -> Tuple[np.ndarray, List[float], bool]:
        ops = self.ops
        traces = X[ops.constrained]
        if self._picard is None:
            A, _ = apply_dirichlet(ops.L, np.zeros(len(X)), ops.constrained, np.zeros(len(traces)))
            self._picard = Factorization(A)
        history: List[float] = []
        b0 = ops.known_rhs(self.problem, X_old, t)
        for it in range(self.config.picard_max_iter):
            b = b0.copy()
            b[ops.n_u :] += ops.nonlinear(self.problem, X[: ops.n_u])
            # lift the traces: the factorized matrix has identity constrained rows and columns
            lifted = np.zeros(len(X))
            lifted[ops.constrained] = traces
            b -= ops.L @ lifted
            b[ops.constrained] = traces
            X = self._picard.solve(b)
            r = float(np.max(np.abs(self._free_residual(X, X_old, t))))
            history.append(r)
            logger.debug("step %d picard %d: |R| = %.3e", m, it + 1, r)
            if not np.isfinite(r):
                break
            if self._converged(r, scale):
                return X, history, True
        return X, history, False

    def step(self, state: State) -> Tuple[State, StepReport]:
        ops = self.ops
        m = state.m + 1
        t = m * self.config.k
        X_old = state.X
        X0 = X_old.copy()
        X0[ops.constrained] = ops.traces(self.problem, t)
        scale = max(1.0, float(np.max(np.abs(np.delete(ops.known_rhs(self.problem, X_old, t), ops.constrained)), initial=0.0)))

        X, history, ok = self._newton(X0, X_old, t, scale, m)
        method = "newton"
        if not ok and self.config.picard_max_iter > 0:
            logger.warning("Newton failed at step %d (|R| = %.3e); trying Picard iteration", m, history[-1])
            start = X if np.all(np.isfinite(X)) else X0
            X, picard_history, ok = self._picard_iterate(start, X_old, t, scale, m)
            history += picard_history
            method = "picard"
        if not ok:
            raise StepFailure(m, history[-1] if history else float("nan"))

        U, P = ops.split(X)
        return State(m, t, U, P), StepReport(m, len(history), history, method)


def be_step(state: State, problem: ProblemDefinition, ops: MixedOperators, config: SolverConfig) -> State:
    return BackwardEulerStepper(problem, ops, config).step(state)[0]


@dataclass
class RunResult:
    operators: MixedOperators
    config: SolverConfig
    states: List[State]
    energy: EnergyTrace
    reports: List[StepReport]
    wall_seconds: float
    cpu_seconds: float

    @property
    def final(self) -> State:
        return self.states[-1]

    @property
    def newton_iterations(self) -> List[int]:
        return [r.iterations for r in self.reports]

    def u(self, state: Optional[State] = None) -> FiniteElementFunction:
        return FiniteElementFunction(self.operators.space_u, (state or self.final).U)

    def p(self, state: Optional[State] = None) -> FiniteElementFunction:
        return FiniteElementFunction(self.operators.space_p, (state or self.final).P)


def run(
    problem: ProblemDefinition,
    mesh: Mesh,
    config: SolverConfig,
    keep_history: bool = True,
    jacobian_dump: Optional[Path] = None,
    on_step: Optional[Callable[[State, StepReport], None]] = None,
) -> RunResult:
    """Advance from t = 0 to T in N = T/k backward Euler steps.

    With keep_history=False only the initial and final states are kept; the energy trace
    always has N + 1 entries.
    """
    if mesh.dim != problem.dim:
        raise InvalidArgumentError(f"problem is {problem.dim}D but the mesh is {mesh.dim}D")
    wall0, cpu0 = time.perf_counter(), time.thread_time()

    ops = build_operators(mesh, config, problem.alpha)
    stepper = BackwardEulerStepper(problem, ops, config, jacobian_dump)
    state = initialize(problem, ops, config)
    states = [state]
    trace = EnergyTrace()
    trace.append(*ops.energy(state.U, state.P))
    reports: List[StepReport] = []

    logger.info(
        "Running %d steps (k=%g, T=%g, P%d x P%d, h=%.4g)",
        config.n_steps, config.k, config.T, config.u_degree, config.p_degree, mesh.h,
    )
    warned = False
    for _ in range(config.n_steps):
        state, report = stepper.step(state)
        reports.append(report)
        trace.append(*ops.energy(state.U, state.P))
        if keep_history:
            states.append(state)
        if on_step is not None:
            on_step(state, report)
        if not warned and problem.forcing is None and trace.energy[-1] > trace.energy[-2] * (1 + 1e-10):
            # expected only for unequal-order pairs or nonzero traces
            logger.warning("Discrete energy increased at step %d", state.m)
            warned = True
    if states[-1] is not state:
        states.append(state)

    wall, cpu = time.perf_counter() - wall0, time.thread_time() - cpu0
    total_iters = sum(r.iterations for r in reports)
    logger.info("Finished %d steps: %d nonlinear iterations, %.2fs wall", config.n_steps, total_iters, wall)
    return RunResult(ops, config, states, trace, reports, wall, cpu)
