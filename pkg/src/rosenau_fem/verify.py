from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from rosenau_fem.assembly import assemble_nonlinear_jacobian, assemble_nonlinear_vector
from rosenau_fem.errors import RosenauError
from rosenau_fem.mesh import generate_interval_mesh, generate_rect_mesh, read_mesh, validate_mesh
from rosenau_fem.problems import make_example, verify_forcing
from rosenau_fem.schema import VerifySection
from rosenau_fem.space import FunctionSpace
from rosenau_fem.stepper import ProblemDefinition, SolverConfig, run

SAMPLE_MESH_DIR = Path(__file__).resolve().parent.parent / "data" / "meshes"


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: Optional[float] = None
    detail: str = ""


def check_forcing(settings: VerifySection) -> List[CheckResult]:
    results = []
    for name in settings.problems:
        entry = make_example(name, forcing_offset=settings.forcing_offset)
        if entry.exact is None:
            results.append(CheckResult(f"forcing:{name}", False, detail="no exact solution to check against"))
            continue
        d = verify_forcing(entry, settings.sample_count)
        results.append(
            CheckResult(f"forcing:{name}", d <= settings.forcing_tol, d, f"discrepancy {d:.3e} (tol {settings.forcing_tol:.0e})")
        )
    return results


def check_meshes() -> List[CheckResult]:
    meshes = {
        "mesh:interval": lambda: generate_interval_mesh(16),
        "mesh:rect": lambda: generate_rect_mesh(16, 16),
    }
    for path in sorted(SAMPLE_MESH_DIR.glob("*.mesh")):
        meshes[f"mesh:{path.stem}"] = lambda p=path: read_mesh(p)

    results = []
    for name, build in meshes.items():
        try:
            violations = validate_mesh(build())
        except RosenauError as exc:
            results.append(CheckResult(name, False, detail=str(exc)))
            continue
        detail = "conforming" if not violations else "; ".join(violations[:3])
        results.append(CheckResult(name, not violations, float(len(violations)), detail))
    return results


def jacobian_fd_error(space: FunctionSpace, rng: np.random.Generator, step: float = 1e-5) -> float:
    """Relative gap between J(U) V and the central difference of N along V."""
    U = rng.standard_normal(space.n_dofs)
    V = rng.standard_normal(space.n_dofs)
    jv = assemble_nonlinear_jacobian(space, U, space) @ V
    fd = (
        assemble_nonlinear_vector(space, U + step * V, space) - assemble_nonlinear_vector(space, U - step * V, space)
    ) / (2.0 * step)
    return float(np.linalg.norm(jv - fd) / max(np.linalg.norm(fd), 1e-300))


def check_jacobian(settings: VerifySection, seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for label, mesh in (("1d", generate_interval_mesh(8)), ("2d", generate_rect_mesh(4, 4))):
        for degree in (1, 2):
            err = max(jacobian_fd_error(FunctionSpace(mesh, degree), rng) for _ in range(3))
            results.append(
                CheckResult(f"jacobian:{label}:P{degree}", err <= settings.jacobian_tol, err, f"relative error {err:.3e}")
            )
    return results


def gaussian_bump(x: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Gaussian centred in the unit box, cut off to vanish on its boundary."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum((x - 0.5) ** 2, axis=1)
    return 4.0**x.shape[1] * np.prod(x * (1.0 - x), axis=1) * np.exp(-r2 / 0.05)


def check_energy_decay(settings: VerifySection) -> List[CheckResult]:
    results = []
    mesh = generate_rect_mesh(settings.energy_n, settings.energy_n)
    problem = ProblemDefinition(alpha=1.0, dim=2, initial_u=gaussian_bump)
    T = settings.energy_steps * settings.energy_k
    for degree in (1, 2):
        config = SolverConfig(k=settings.energy_k, T=T, u_degree=degree, p_degree=degree)
        trace = run(problem, mesh, config, keep_history=False).energy
        worst = float(np.max(trace.increments()) / trace.energy[0])
        ok = trace.is_non_increasing(settings.energy_rtol)
        results.append(
            CheckResult(f"energy:P{degree}xP{degree}", ok, worst, f"largest relative increase {worst:.3e}")
        )
    return results


def run_checks(settings: VerifySection) -> List[CheckResult]:
    return check_forcing(settings) + check_meshes() + check_jacobian(settings) + check_energy_decay(settings)


def print_report(results: List[CheckResult]) -> None:
    total = len(results)
    passed = sum(1 for r in results if r.passed)

    print("\n=== Verification Report ===")
    print(f"Passed: {passed}/{total}\n")

    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}")
        if r.detail:
            print(f"  {r.detail}")

    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"\nFailed checks: {', '.join(failed)}")


def main(settings: Optional[VerifySection] = None) -> int:
    results = run_checks(settings or VerifySection())
    print_report(results)
    return 0 if all(r.passed for r in results) else 1
