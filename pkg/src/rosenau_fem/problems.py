"""Built-in problems: three manufactured solutions and the Gaussian demonstration runs.

Forcings are closed forms of f = u_t + lap^2 u_t - alpha lap u - div g(u) with
g_i(u) = -(u + u^2/2), so -div g(u) = (1 + u) * sum_i du/dx_i. `verify_forcing` checks them
against finite differences of the exact solution. Each manufactured solution is separable,
u = s(t) phi(x), with an exponential or a linear temporal factor s.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from rosenau_fem.errors import InvalidArgumentError, MissingExactSolutionError
from rosenau_fem.mesh import Mesh, generate_interval_mesh, generate_rect_mesh
from rosenau_fem.space import SpatialFunction
from rosenau_fem.stepper import ProblemDefinition

logger = logging.getLogger("rosenau_fem.problems")

EXAMPLE_NAMES = ("example1", "example2_case1", "example2_case2", "example3", "example4")
MANUFACTURED = ("example1", "example3", "example4")

GradientFunction = Callable[[np.ndarray, float], np.ndarray]
ProfileFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form evaluators of a manufactured solution; x has shape (n, dim)."""

    u: SpatialFunction
    grad_u: GradientFunction
    laplacian_u: SpatialFunction
    u_t: SpatialFunction
    laplacian_u_t: SpatialFunction
    bilaplacian_u_t: SpatialFunction

    def p(self, x: np.ndarray, t: float) -> np.ndarray:
        return -self.laplacian_u(x, t)

    def div_g(self, x: np.ndarray, t: float) -> np.ndarray:
        """div g(u) = -(1 + u) * sum_i du/dx_i"""
        return -(1.0 + self.u(x, t)) * self.grad_u(x, t).sum(axis=1)

    def forcing(self, alpha: float, nonlinear: bool = True, offset: float = 0.0) -> SpatialFunction:
        def f(x: np.ndarray, t: float) -> np.ndarray:
            val = self.u_t(x, t) + self.bilaplacian_u_t(x, t) - alpha * self.laplacian_u(x, t)
            if nonlinear:
                val = val - self.div_g(x, t)
            return val + offset

        return f


@dataclass(frozen=True)
class Domain:
    """Axis-aligned interval (a, b) or rectangle (x0, x1, y0, y1)."""

    bounds: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.bounds) not in (2, 4):
            raise InvalidArgumentError(f"domain bounds must have 2 or 4 entries, got {self.bounds}")
        lo, hi = self.bounds[0::2], self.bounds[1::2]
        if any(a >= b for a, b in zip(lo, hi)):
            raise InvalidArgumentError(f"degenerate domain {self.bounds}")

    @property
    def dim(self) -> int:
        return len(self.bounds) // 2

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in zip(self.bounds[0::2], self.bounds[1::2])]))

    def on_boundary(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo = np.array(self.bounds[0::2])
        hi = np.array(self.bounds[1::2])
        inside = np.all((x >= lo - tol) & (x <= hi + tol), axis=1)
        near = np.any((np.abs(x - lo) <= tol) | (np.abs(x - hi) <= tol), axis=1)
        return inside & near

    def sample(self, rng: np.random.Generator, n: int, margin: float = 0.0) -> np.ndarray:
        lo = np.array(self.bounds[0::2]) + margin
        hi = np.array(self.bounds[1::2]) - margin
        return lo + (hi - lo) * rng.random((n, self.dim))

    def mesh(self, n: int) -> Mesh:
        if self.dim == 1:
            return generate_interval_mesh(n, *self.bounds)
        return generate_rect_mesh(n, n, self.bounds)


@dataclass(frozen=True)
class ProblemCatalogEntry:
    name: str
    domain: Domain
    problem: ProblemDefinition
    exact: Optional[ExactSolution] = None
    description: str = ""
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def require_exact(self) -> ExactSolution:
        if self.exact is None:
            raise MissingExactSolutionError(f"{self.name} has no exact solution")
        return self.exact


UNIT_INTERVAL = Domain((0.0, 1.0))
UNIT_SQUARE = Domain((0.0, 1.0, 0.0, 1.0))


def _col(x: np.ndarray, i: int) -> np.ndarray:
    return np.asarray(x, dtype=float)[:, i]


@dataclass(frozen=True)
class TimeProfile:
    """Temporal factor s(t) of a separable solution u = s(t) phi(x)."""

    name: str
    s: Callable[[float], float]
    ds: Callable[[float], float]


def _time_profile(name: str, rate: float) -> TimeProfile:
    if name == "exponential":
        return TimeProfile(name, lambda t: np.exp(rate * t), lambda t: rate * np.exp(rate * t))
    if name == "linear":
        # the backward difference quotient of u is exact for this profile
        return TimeProfile(name, lambda t: 1.0 + t, lambda t: 1.0)
    raise InvalidArgumentError(f"unknown time profile {name!r}; expected 'exponential' or 'linear'")


def _separable(
    phi: ProfileFunction,
    grad_phi: ProfileFunction,
    lap_phi: ProfileFunction,
    bilap_phi: ProfileFunction,
    profile: TimeProfile,
) -> ExactSolution:
    s, ds = profile.s, profile.ds
    return ExactSolution(
        u=lambda x, t: s(t) * phi(x),
        grad_u=lambda x, t: s(t) * grad_phi(x),
        laplacian_u=lambda x, t: s(t) * lap_phi(x),
        u_t=lambda x, t: ds(t) * phi(x),
        laplacian_u_t=lambda x, t: ds(t) * lap_phi(x),
        bilaplacian_u_t=lambda x, t: ds(t) * bilap_phi(x),
    )


# phi = w^3 with w = x(1 - x); s = e^{-t} by default
def _example1_solution(profile: TimeProfile) -> ExactSolution:
    def parts(x):
        X = _col(x, 0)
        return X - X * X, 1.0 - 2.0 * X

    def phi(x):
        w, _ = parts(x)
        return w**3

    def grad_phi(x):
        w, d = parts(x)
        return (3.0 * w**2 * d)[:, None]

    def lap_phi(x):
        w, d = parts(x)
        return 6.0 * w * d**2 - 6.0 * w**2

    def bilap_phi(x):
        w, d = parts(x)
        return 72.0 * w - 72.0 * d**2

    return _separable(phi, grad_phi, lap_phi, bilap_phi, profile)


# phi = sin(2 pi x) sin(2 pi y); s = e^{-t} by default
def _example3_solution(profile: TimeProfile) -> ExactSolution:
    w = 2.0 * np.pi

    def phi(x):
        return np.sin(w * _col(x, 0)) * np.sin(w * _col(x, 1))

    def grad_phi(x):
        X, Y = _col(x, 0), _col(x, 1)
        return w * np.column_stack([np.cos(w * X) * np.sin(w * Y), np.sin(w * X) * np.cos(w * Y)])

    return _separable(
        phi, grad_phi, lambda x: -2.0 * w**2 * phi(x), lambda x: 4.0 * w**4 * phi(x), profile
    )


# phi = e^{2x + 2y}; s = e^{2t} by default
def _example4_solution(profile: TimeProfile) -> ExactSolution:
    def phi(x):
        return np.exp(2.0 * _col(x, 0) + 2.0 * _col(x, 1))

    return _separable(
        phi,
        lambda x: np.repeat((2.0 * phi(x))[:, None], 2, axis=1),
        lambda x: 8.0 * phi(x),
        lambda x: 64.0 * phi(x),
        profile,
    )


def _manufactured(
    name: str,
    domain: Domain,
    exact: ExactSolution,
    alpha: float,
    nonlinear: bool,
    forcing_offset: float,
    description: str,
    time_profile: str,
) -> ProblemCatalogEntry:
    problem = ProblemDefinition(
        alpha=alpha,
        dim=domain.dim,
        initial_u=exact.u,
        initial_grad_u=exact.grad_u,
        initial_p=exact.p,
        dirichlet_u=exact.u,
        dirichlet_p=exact.p,
        forcing=exact.forcing(alpha, nonlinear, forcing_offset),
        nonlinear=nonlinear,
    )
    params = {"alpha": alpha, "forcing_offset": forcing_offset, "time_profile": time_profile}
    return ProblemCatalogEntry(name, domain, problem, exact, description, params)


def _gaussian(name: str, beta: float, decay: bool, alpha: float, nonlinear: bool) -> ProblemCatalogEntry:
    def u_i(x, t=0.0):
        r2 = (_col(x, 0) - 0.5) ** 2 + (_col(x, 1) - 0.5) ** 2
        return np.exp(-r2 / beta)

    def grad_u_i(x, t=0.0):
        return (-2.0 / beta) * (np.asarray(x, dtype=float) - 0.5) * u_i(x)[:, None]

    def minus_lap_u_i(x, t=0.0):
        r2 = (_col(x, 0) - 0.5) ** 2 + (_col(x, 1) - 0.5) ** 2
        return u_i(x) * (4.0 / beta - 4.0 * r2 / beta**2)

    scale = (lambda t: np.exp(-t)) if decay else (lambda t: 1.0)
    problem = ProblemDefinition(
        alpha=alpha,
        dim=2,
        initial_u=u_i,
        initial_grad_u=grad_u_i,
        initial_p=minus_lap_u_i,
        dirichlet_u=lambda x, t: scale(t) * u_i(x),
        dirichlet_p=lambda x, t: scale(t) * minus_lap_u_i(x),
        forcing=None,
        nonlinear=nonlinear,
    )
    kind = "decaying" if decay else "fixed"
    return ProblemCatalogEntry(
        name, UNIT_SQUARE, problem, None, f"homogeneous 2D run, Gaussian data, {kind} traces", {"beta": beta, "alpha": alpha}
    )


def make_example(
    name: str,
    beta: float = 1.0,
    alpha: float = 1.0,
    nonlinear: bool = True,
    forcing_offset: float = 0.0,
    time_profile: str = "exponential",
) -> ProblemCatalogEntry:
    """Catalog entry by name.

    `time_profile` swaps the temporal factor of a manufactured solution for 1 + t, which
    isolates the spatial error. `forcing_offset` adds a constant to the manufactured forcing;
    only the verifier's fault-injection path uses it.
    """
    if alpha <= 0:
        raise InvalidArgumentError(f"alpha must be > 0, got {alpha}")
    if name == "example1":
        profile = _time_profile(time_profile, -1.0)
        return _manufactured(
            name, UNIT_INTERVAL, _example1_solution(profile), alpha, nonlinear, forcing_offset,
            f"1D, u = s(t) x^3 (1-x)^3, {profile.name} s", profile.name,
        )
    if name == "example3":
        profile = _time_profile(time_profile, -1.0)
        return _manufactured(
            name, UNIT_SQUARE, _example3_solution(profile), alpha, nonlinear, forcing_offset,
            f"unit square, u = s(t) sin(2 pi x) sin(2 pi y), {profile.name} s", profile.name,
        )
    if name == "example4":
        profile = _time_profile(time_profile, 2.0)
        return _manufactured(
            name, UNIT_SQUARE, _example4_solution(profile), alpha, nonlinear, forcing_offset,
            f"unit square, u = s(t) exp(2x + 2y), {profile.name} s, nonhomogeneous traces", profile.name,
        )
    if name in ("example2_case1", "example2_case2"):
        if beta <= 0:
            raise InvalidArgumentError(f"beta must be > 0, got {beta}")
        return _gaussian(name, beta, name.endswith("case2"), alpha, nonlinear)
    raise InvalidArgumentError(f"unknown problem {name!r}; expected one of {', '.join(EXAMPLE_NAMES)}")


def boundary_trace_p(entry: ProblemCatalogEntry, x: np.ndarray, t: float, tol: float = 1e-12):
    """-lap u on the boundary; scalar for a single point."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[1] != entry.dim:
        pts = pts.reshape(-1, entry.dim)
    if not np.all(entry.domain.on_boundary(pts, tol)):
        raise InvalidArgumentError(f"point(s) not on the boundary of {entry.name}")
    vals = np.asarray(entry.problem.dirichlet_p(pts, t), dtype=float) * np.ones(len(pts))
    if np.ndim(x) == 1 and np.size(x) == entry.dim or np.ndim(x) == 0:
        return float(vals[0])
    return vals


# Finite-difference oracle

FD_SPACE_STEP = 8e-2
FD_SPACE_LEVELS = 3
FD_TIME_STEP = 5e-2
FD_TIME_LEVELS = 3


def _romberg(op: Callable[[float], np.ndarray], h: float, levels: int) -> np.ndarray:
    """Extrapolate a symmetric difference quotient with an even error expansion."""
    table = [op(h / 2**i) for i in range(levels)]
    for j in range(1, levels):
        c = 4.0**j
        table = [(c * table[i + 1] - table[i]) / (c - 1.0) for i in range(len(table) - 1)]
    return table[0]


def _fd_laplacian(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    dim = x.shape[1]

    def op(h: float) -> np.ndarray:
        gx = g(x)
        out = np.zeros(len(x))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            out += (g(x + e) - 2.0 * gx + g(x - e)) / h**2
        return out

    return _romberg(op, FD_SPACE_STEP, FD_SPACE_LEVELS)


def _fd_bilaplacian(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    dim = x.shape[1]

    def lap_h(func, pts, h):
        fx = func(pts)
        out = np.zeros(len(pts))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            out += (func(pts + e) - 2.0 * fx + func(pts - e)) / h**2
        return out

    def op(h: float) -> np.ndarray:
        return lap_h(lambda p: lap_h(g, p, h), x, h)

    return _romberg(op, FD_SPACE_STEP, FD_SPACE_LEVELS)


def _fd_divergence_sum(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """sum_i dg/dx_i"""
    dim = x.shape[1]

    def op(h: float) -> np.ndarray:
        out = np.zeros(len(x))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            out += (g(x + e) - g(x - e)) / (2.0 * h)
        return out

    return _romberg(op, FD_SPACE_STEP, FD_SPACE_LEVELS)


def _fd_time_derivative(u: SpatialFunction, x: np.ndarray, t: float) -> np.ndarray:
    return _romberg(lambda tau: (u(x, t + tau) - u(x, t - tau)) / (2.0 * tau), FD_TIME_STEP, FD_TIME_LEVELS)


def fd_forcing(entry: ProblemCatalogEntry, x: np.ndarray, t: float) -> np.ndarray:
    """u_t + lap^2 u_t - alpha lap u - div g(u) by finite differences of the exact u."""
    exact = entry.require_exact()
    alpha = entry.problem.alpha

    def u_t(p):
        return _fd_time_derivative(exact.u, p, t)

    def u_now(p):
        return exact.u(p, t)

    val = u_t(x) + _fd_bilaplacian(u_t, x) - alpha * _fd_laplacian(u_now, x)
    if entry.problem.nonlinear:
        val = val + _fd_divergence_sum(lambda p: u_now(p) + 0.5 * u_now(p) ** 2, x)
    return val


def verify_forcing(
    entry: ProblemCatalogEntry, sample_count: int = 200, seed: int = 0, t_max: float = 1.0
) -> float:
    """Max discrepancy between the closed-form forcing and its finite-difference oracle,
    relative to the largest oracle value, over random interior points and times."""
    entry.require_exact()
    if entry.problem.forcing is None:
        raise MissingExactSolutionError(f"{entry.name} has no forcing to verify")
    rng = np.random.default_rng(seed)
    x = entry.domain.sample(rng, sample_count, margin=0.05)
    times = t_max * rng.random(sample_count)

    closed = np.empty(sample_count)
    oracle = np.empty(sample_count)
    for i, t in enumerate(times):
        xi = x[i : i + 1]
        closed[i] = np.asarray(entry.problem.forcing(xi, float(t)), dtype=float).ravel()[0]
        oracle[i] = fd_forcing(entry, xi, float(t))[0]

    scale = float(np.max(np.abs(oracle)))
    discrepancy = float(np.max(np.abs(closed - oracle)) / scale) if scale > 0 else float(np.max(np.abs(closed)))
    logger.debug("verify_forcing %s: discrepancy %.3e over %d samples", entry.name, discrepancy, sample_count)
    return discrepancy
