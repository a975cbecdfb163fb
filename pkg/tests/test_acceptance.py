"""End-to-end convergence reproductions. Each takes from seconds to many minutes.

The spatial studies use the linear temporal factor: its backward difference quotient is exact,
so the observed orders are those of the spatial discretization alone. With the exponential
factor backward Euler leaves an error of about 2e-5 in L2 at k = 0.01, which hides the fine
levels of a spatial study.
"""

import numpy as np
import pytest

from rosenau_fem.analysis import StudyLevel, convergence_study
from rosenau_fem.mesh import generate_interval_mesh
from rosenau_fem.oracle import rk_reference_run
from rosenau_fem.problems import make_example
from rosenau_fem.stepper import SolverConfig, build_operators, run

pytestmark = pytest.mark.slow


def _spatial_study(name, sizes, k=0.25):
    levels = [StudyLevel(n, k) for n in sizes]
    return convergence_study(make_example(name, time_profile="linear"), levels, SolverConfig(k=k, T=1.0))


def test_example1_spatial_refinement():
    table = _spatial_study("example1", (4, 8, 16, 32, 64))
    l2 = [row.report.l2 for row in table.rows]
    assert l2 == sorted(l2, reverse=True)
    assert table.finest_order("L2") == pytest.approx(3.0, abs=0.15)
    assert table.finest_order("H1") == pytest.approx(2.0, abs=0.15)


def test_example1_joint_refinement():
    levels = [StudyLevel(n, 1.0 / n) for n in (4, 8, 16, 32, 64)]
    table = convergence_study(make_example("example1"), levels, SolverConfig(k=0.25, T=1.0), axis="hk")
    assert table.finest_order("H2") == pytest.approx(1.0, abs=0.15)


def test_example3_spatial_refinement():
    table = _spatial_study("example3", (32, 64, 128))
    assert table.finest_order("L2") == pytest.approx(3.0, abs=0.2)
    for order in table.orders("H1")[1:]:
        assert order == pytest.approx(2.0, abs=0.2)
    for order in table.orders("H2")[1:]:
        assert order == pytest.approx(1.0, abs=0.2)


def test_example4_spatial_refinement():
    table = _spatial_study("example4", (16, 32, 64))
    for order in table.orders("H1")[1:]:
        assert order == pytest.approx(2.0, abs=0.2)
    cpu = [row.cpu_seconds for row in table.rows]
    assert cpu == sorted(cpu)


def test_backward_euler_converges_to_the_semidiscrete_solution():
    entry = make_example("example1")
    mesh = generate_interval_mesh(8)
    errors = []
    for k in (0.1, 0.05, 0.025):
        config = SolverConfig(k=k, T=1.0, u_degree=1, p_degree=1)
        ops = build_operators(mesh, config, entry.problem.alpha)
        reference = rk_reference_run(entry.problem, mesh, config, substeps=100, ops=ops)
        diff = run(entry.problem, mesh, config, keep_history=False).final.U - reference
        errors.append(float(np.sqrt(diff @ (ops.M_uu @ diff))))
    for coarse, fine in zip(errors, errors[1:]):
        assert np.log2(coarse / fine) >= 0.9
