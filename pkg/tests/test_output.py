import csv

import numpy as np
import pytest

from rosenau_fem.analysis import ConvergenceRow, ConvergenceTable, ErrorReport
from rosenau_fem.mesh import generate_interval_mesh, generate_rect_mesh
from rosenau_fem.output import (
    TABLE_HEADER,
    render_markdown,
    table_rows,
    write_energy_csv,
    write_table_csv,
    write_vtk,
)
from rosenau_fem.space import FunctionSpace
from rosenau_fem.stepper import EnergyTrace


def _table():
    rows = []
    for h, l2 in ((0.25, 4.4381e-6), (0.125, 7.8418e-7)):
        report = ErrorReport(t=1.0, l2=l2, h1=10 * l2, h2=100 * l2, linf_nodes=l2 / 2, h=h, k=0.01)
        rows.append(ConvergenceRow(h, 0.01, report, cpu_seconds=1.25))
    table = ConvergenceTable("h", rows, "example1")
    table.fill_orders()
    return table


def test_vtk_file_layout(tmp_path):
    mesh = generate_rect_mesh(2, 2)
    Vu, Vp = FunctionSpace(mesh, 2), FunctionSpace(mesh, 1)
    u = Vu.interpolate(lambda x, t: x[:, 0])
    p = Vp.interpolate(lambda x, t: x[:, 1])
    path = write_vtk(tmp_path / "fields" / "out.vtk", mesh, u, p, title="demo")
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[1] == "demo"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert f"POINTS {mesh.n_nodes} double" in lines
    assert f"CELLS {mesh.n_cells} {mesh.n_cells * 4}" in lines
    assert lines.count("5") >= mesh.n_cells
    assert "SCALARS u double 1" in lines and "SCALARS p double 1" in lines
    start = lines.index("SCALARS u double 1") + 2
    np.testing.assert_allclose([float(v) for v in lines[start : start + mesh.n_nodes]], mesh.points[:, 0])


def test_vtk_pads_1d_points(tmp_path):
    mesh = generate_interval_mesh(2)
    V = FunctionSpace(mesh, 1)
    u = V.interpolate(lambda x, t: np.ones(len(x)))
    lines = write_vtk(tmp_path / "line.vtk", mesh, u, u).read_text().splitlines()
    i = lines.index("POINTS 3 double")
    assert lines[i + 2] == "0.5 0 0"
    assert lines[lines.index("CELL_TYPES 2") + 1] == "3"


def test_energy_csv_has_one_row_per_level(tmp_path):
    trace = EnergyTrace()
    for e in (1.0, 0.9, 0.8):
        trace.append(e, e + 1)
    path = write_energy_csv(tmp_path / "energy.csv", trace, 0.5)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["m", "t", "energy", "h1_sq"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert rows[-1][1] == "1"
    assert float(rows[2][2]) == pytest.approx(0.9)


def test_table_rows_format():
    rows = table_rows(_table())
    assert rows[0][3] == "" and rows[0][5] == "" and rows[0][7] == ""
    assert rows[1][3] == "2.5007"
    assert rows[1][2] == "7.841800e-07"
    assert rows[1][-1] == "1.250"


def test_table_without_cpu_time():
    assert all(row[-1] == "" for row in table_rows(_table(), record_cpu_time=False))


def test_table_csv_header(tmp_path):
    path = write_table_csv(tmp_path / "t.csv", _table())
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TABLE_HEADER
    assert rows[0] == ["h", "k", "L2", "L2_order", "H1", "H1_order", "H2", "H2_order", "Linf", "cpu_seconds"]
    assert len(rows) == 3


def test_markdown_rendering():
    text = render_markdown(_table())
    lines = text.splitlines()
    assert lines[0] == "### example1, refinement in h"
    assert lines[2] == "| " + " | ".join(TABLE_HEADER) + " |"
    assert len(lines) == 6
