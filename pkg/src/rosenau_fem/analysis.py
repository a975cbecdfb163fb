"""Error norms against exact solutions, observed orders and convergence studies."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from rosenau_fem.assembly import cell_quadrature
from rosenau_fem.errors import InvalidArgumentError, MissingExactSolutionError, RosenauError, StudyError
from rosenau_fem.mesh import Mesh
from rosenau_fem.problems import ExactSolution, ProblemCatalogEntry
from rosenau_fem.space import FiniteElementFunction, FunctionSpace
from rosenau_fem.stepper import RunResult, SolverConfig, run

logger = logging.getLogger("rosenau_fem.analysis")

NORMS = ("L2", "H1", "H2")
StudyAxis = Literal["h", "k", "hk"]


@dataclass(frozen=True)
class ErrorReport:
    t: float
    l2: float
    h1: float
    h2: float
    linf_nodes: float
    h: float
    k: Optional[float] = None
    p_l2: Optional[float] = None

    def norm(self, name: str) -> float:
        return {"L2": self.l2, "H1": self.h1, "H2": self.h2, "Linf": self.linf_nodes}[name]


def broken_laplacian(space: FunctionSpace, coefficients: np.ndarray) -> np.ndarray:
    """Element-wise Laplacian of a P1/P2 function, one value per cell."""
    inv_b = np.linalg.inv(space.mesh.jacobians)
    hess = space.element.hessians()
    # trace(B^-T H B^-1) per local basis function
    lap_basis = np.einsum("cba,cda,kbd->ck", inv_b, inv_b, hess)
    return np.einsum("ck,ck->c", lap_basis, coefficients[space.dofmap])


def error_norms(
    u_h: FiniteElementFunction,
    exact: Optional[ExactSolution],
    t: float,
    p_h: Optional[FiniteElementFunction] = None,
    k: Optional[float] = None,
) -> ErrorReport:
    """L2, H1 and H2 errors of u_h at time t.

    H1 and H2 are the full norms (sum of seminorms up to that order); the second-order part
    is ||lap u - lap_h u_h|| with the broken Laplacian of u_h.
    """
    if exact is None:
        raise MissingExactSolutionError("error norms need an exact solution")
    space = u_h.space
    mesh = space.mesh
    cq = cell_quadrature(mesh, space.degree + 4)
    x = cq.x.reshape(-1, mesh.dim)
    nc, nq = cq.shape

    e = exact.u(x, t).reshape(nc, nq) - cq.function_values(space, u_h.coefficients)
    grad_e = np.asarray(exact.grad_u(x, t)).reshape(nc, nq, mesh.dim) - cq.function_gradients(space, u_h.coefficients)
    lap_e = exact.laplacian_u(x, t).reshape(nc, nq) - broken_laplacian(space, u_h.coefficients)[:, None]

    l2_sq = float(np.sum(cq.wdet * e**2))
    semi1_sq = float(np.sum(cq.wdet[:, :, None] * grad_e**2))
    semi2_sq = float(np.sum(cq.wdet * lap_e**2))

    verts = mesh.points
    linf = float(np.max(np.abs(exact.u(verts, t) - u_h.vertex_values())))

    p_l2 = None
    if p_h is not None:
        cqp = cell_quadrature(mesh, p_h.space.degree + 4)
        xp = cqp.x.reshape(-1, mesh.dim)
        ep = exact.p(xp, t).reshape(cqp.shape) - cqp.function_values(p_h.space, p_h.coefficients)
        p_l2 = math.sqrt(float(np.sum(cqp.wdet * ep**2)))

    return ErrorReport(
        t=t,
        l2=math.sqrt(l2_sq),
        h1=math.sqrt(l2_sq + semi1_sq),
        h2=math.sqrt(l2_sq + semi1_sq + semi2_sq),
        linf_nodes=linf,
        h=mesh.h,
        k=k,
        p_l2=p_l2,
    )


def observed_order(e1: float, e2: float, s1: float, s2: float) -> float:
    """log(e1/e2) / log(s1/s2)"""
    if e1 <= 0 or e2 <= 0:
        raise InvalidArgumentError(f"errors must be positive, got {e1}, {e2}")
    if s1 <= 0 or s2 <= 0 or s1 == s2:
        raise InvalidArgumentError(f"step sizes must be positive and distinct, got {s1}, {s2}")
    return math.log(e1 / e2) / math.log(s1 / s2)


@dataclass(frozen=True)
class StudyLevel:
    n: int
    k: float


@dataclass
class ConvergenceRow:
    h: float
    k: float
    report: ErrorReport
    cpu_seconds: float
    orders: Dict[str, Optional[float]] = field(default_factory=lambda: {name: None for name in NORMS})


@dataclass
class ConvergenceTable:
    axis: str
    rows: List[ConvergenceRow]
    problem: str = ""

    def step(self, row: ConvergenceRow) -> float:
        return row.k if self.axis == "k" else row.h

    def fill_orders(self) -> None:
        for prev, row in zip(self.rows, self.rows[1:]):
            for name in NORMS:
                row.orders[name] = observed_order(
                    prev.report.norm(name), row.report.norm(name), self.step(prev), self.step(row)
                )

    def orders(self, name: str) -> List[Optional[float]]:
        return [row.orders[name] for row in self.rows]

    def finest_order(self, name: str) -> float:
        return self.rows[-1].orders[name]


def _run_level(
    entry: ProblemCatalogEntry, mesh: Mesh, config: SolverConfig, level: int
) -> ConvergenceRow:
    exact = entry.require_exact()
    try:
        result = run(entry.problem, mesh, config, keep_history=False)
    except RosenauError as exc:
        raise StudyError(f"level {level} (h={mesh.h:.4g}, k={config.k:g}) failed: {exc}", level=level) from exc
    report = error_norms(result.u(), exact, result.final.t, result.p(), k=config.k)
    logger.info(
        "level %d: h=%.4g k=%g L2=%.4e H1=%.4e H2=%.4e (%.2fs)",
        level, mesh.h, config.k, report.l2, report.h1, report.h2, result.cpu_seconds,
    )
    return ConvergenceRow(mesh.h, config.k, report, result.cpu_seconds)


def convergence_study(
    entry: ProblemCatalogEntry,
    levels: Sequence[StudyLevel],
    config: SolverConfig,
    axis: StudyAxis = "h",
    meshes: Optional[Sequence[Mesh]] = None,
    parallel: bool = False,
    max_workers: int = 1,
) -> ConvergenceTable:
    """Run one solve per level and fill observed orders between consecutive levels.

    Each level overrides k; meshes default to the entry's domain refined with n cells per
    direction. Rows keep the level order regardless of `parallel`.
    """
    if len(levels) < 2:
        raise StudyError("need ≥ 2 levels")
    if axis not in ("h", "k", "hk"):
        raise InvalidArgumentError(f"unknown refinement axis {axis!r}")
    entry.require_exact()
    if meshes is None:
        meshes = [entry.domain.mesh(level.n) for level in levels]
    if len(meshes) != len(levels):
        raise InvalidArgumentError("one mesh per level is required")
    try:
        configs = [SolverConfig.model_validate({**config.model_dump(), "k": level.k}) for level in levels]
    except ValidationError as exc:
        raise InvalidArgumentError(f"invalid study level: {exc.errors()[0]['msg']}") from None

    jobs = list(zip(meshes, configs, range(len(levels))))
    if parallel and max_workers > 1:
        logger.info("Running %d levels on %d threads", len(jobs), max_workers)
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda job: _run_level(entry, *job), jobs))
    else:
        rows = [_run_level(entry, *job) for job in jobs]

    table = ConvergenceTable(axis, rows, entry.name)
    table.fill_orders()
    return table


def error_series(result: RunResult, exact: Optional[ExactSolution]) -> List[ErrorReport]:
    """error_norms at every stored time level of a run."""
    return [
        error_norms(result.u(state), exact, state.t, result.p(state), k=result.config.k)
        for state in result.states
    ]


@dataclass(frozen=True)
class BochnerSummary:
    """Discrete L^inf(I; Z), L^2(I; Z) and L^1(I; Z) of an error series, Z in {L2, H1}."""

    values: Dict[str, Dict[str, float]]

    def __getitem__(self, key: str) -> Dict[str, float]:
        return self.values[key]


def bochner_summary(series: Sequence[ErrorReport], k: float) -> BochnerSummary:
    """Summaries over levels m >= 1 (the initial level is excluded)."""
    if k <= 0:
        raise InvalidArgumentError(f"k must be > 0, got {k}")
    levels = [r for r in series if r.t > 0] or list(series)
    values = {}
    for name, attr in (("L2", "l2"), ("H1", "h1")):
        e = np.array([getattr(r, attr) for r in levels])
        values[name] = {
            "max": float(e.max()) if e.size else 0.0,
            "l2": float(math.sqrt(k * float(np.sum(e**2)))),
            "l1": float(k * float(np.sum(e))),
        }
    return BochnerSummary(values)
