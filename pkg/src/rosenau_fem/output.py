"""Result files: legacy VTK fields, energy traces and convergence tables (CSV + markdown)."""

import csv
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from rosenau_fem.analysis import NORMS, ConvergenceTable
from rosenau_fem.mesh import Mesh
from rosenau_fem.space import FiniteElementFunction
from rosenau_fem.stepper import EnergyTrace

logger = logging.getLogger("rosenau_fem.output")

PathLike = Union[str, Path]

TABLE_HEADER = ["h", "k", "L2", "L2_order", "H1", "H1_order", "H2", "H2_order", "Linf", "cpu_seconds"]
VTK_CELL_TYPES = {1: 3, 2: 5}  # VTK_LINE, VTK_TRIANGLE


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_vtk(path: PathLike, mesh: Mesh, u: FiniteElementFunction, p: FiniteElementFunction, title: str = "rosenau") -> Path:
    """Legacy ASCII unstructured grid with vertex values of u and p as POINT_DATA."""
    path = _prepare(path)
    pts = np.zeros((mesh.n_nodes, 3))
    pts[:, : mesh.dim] = mesh.points
    nloc = mesh.dim + 1

    lines: List[str] = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    lines += [" ".join(f"{c:.17g}" for c in row) for row in pts]
    lines.append(f"CELLS {mesh.n_cells} {mesh.n_cells * (nloc + 1)}")
    lines += [f"{nloc} " + " ".join(str(int(v)) for v in cell) for cell in mesh.cells]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += [str(VTK_CELL_TYPES[mesh.dim])] * mesh.n_cells
    lines.append(f"POINT_DATA {mesh.n_nodes}")
    for name, fn in (("u", u), ("p", p)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in fn.vertex_values()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote field to %s", path)
    return path


def write_energy_csv(path: PathLike, trace: EnergyTrace, k: float) -> Path:
    """One row per time level m = 0..N."""
    path = _prepare(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "t", "energy", "h1_sq"])
        for m, (e, h1) in enumerate(zip(trace.energy, trace.h1_sq)):
            writer.writerow([m, f"{m * k:.12g}", f"{e:.12e}", f"{h1:.12e}"])
    logger.info("Wrote energy trace (%d rows) to %s", len(trace), path)
    return path


def _order(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def table_rows(table: ConvergenceTable, record_cpu_time: bool = True) -> List[List[str]]:
    rows = []
    for row in table.rows:
        r = row.report
        cells = [f"{row.h:.12g}", f"{row.k:.12g}"]
        for name in NORMS:
            cells += [f"{r.norm(name):.6e}", _order(row.orders[name])]
        cells += [f"{r.linf_nodes:.6e}", f"{row.cpu_seconds:.3f}" if record_cpu_time else ""]
        rows.append(cells)
    return rows


def write_table_csv(path: PathLike, table: ConvergenceTable, record_cpu_time: bool = True) -> Path:
    path = _prepare(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_HEADER)
        writer.writerows(table_rows(table, record_cpu_time))
    logger.info("Wrote convergence table to %s", path)
    return path


def render_markdown(table: ConvergenceTable, record_cpu_time: bool = True) -> str:
    header = "| " + " | ".join(TABLE_HEADER) + " |"
    rule = "|" + "|".join("---" for _ in TABLE_HEADER) + "|"
    body = ["| " + " | ".join(cells) + " |" for cells in table_rows(table, record_cpu_time)]
    title = f"{table.problem}, refinement in {table.axis}" if table.problem else f"refinement in {table.axis}"
    return "\n".join([f"### {title}", "", header, rule, *body]) + "\n"


def write_table_markdown(path: PathLike, table: ConvergenceTable, record_cpu_time: bool = True) -> Path:
    path = _prepare(path)
    path.write_text(render_markdown(table, record_cpu_time), encoding="utf-8")
    return path
