"""Conforming simplicial meshes of intervals (1D) and polygons (2D).

A mesh stores 0-based node indices internally; the ASCII file format uses 1-based ids.

File format::

    # comment
    $Nodes
    <count>
    <id> <x> [<y>]
    $Cells
    <count>
    <id> <v0> <v1> [<v2>]
    $Boundary          (optional)
    <count>
    <node_id> <marker>
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from rosenau_fem.errors import InvalidArgumentError, InvalidMeshError, MeshParseError

logger = logging.getLogger("rosenau_fem.mesh")

DIRICHLET_MARKER = 1

# below this diam(J)/h the mesh is far from quasi-uniform
MIN_QUALITY_RATIO = 0.1

# Local edge numbering; P2 midpoint dofs follow the same order.
LOCAL_EDGES = {
    1: ((0, 1),),
    2: ((0, 1), (1, 2), (2, 0)),
}


class Node(NamedTuple):
    id: int
    coords: Tuple[float, ...]


class Cell(NamedTuple):
    id: int
    vertex_ids: Tuple[int, ...]


class MeshQuality(NamedTuple):
    min_ratio: float
    max_ratio: float


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable simplicial mesh.

    points: (n_nodes, dim) coordinates
    cells: (n_cells, dim + 1) 0-based vertex indices
    boundary_markers: node index -> marker
    """

    points: np.ndarray
    cells: np.ndarray
    boundary_markers: Dict[int, int]

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        cells = np.array(self.cells, dtype=np.int64)
        if points.ndim != 2 or points.shape[1] not in (1, 2):
            raise InvalidArgumentError(f"points must have shape (n, 1) or (n, 2), got {points.shape}")
        if cells.ndim != 2 or cells.shape[1] != points.shape[1] + 1:
            raise InvalidArgumentError(
                f"cells must have {points.shape[1] + 1} vertices for a {points.shape[1]}D mesh"
            )
        points.flags.writeable = False
        cells.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "boundary_markers", dict(self.boundary_markers))

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def n_nodes(self) -> int:
        return int(self.points.shape[0])

    @property
    def n_cells(self) -> int:
        return int(self.cells.shape[0])

    @property
    def nodes(self) -> List[Node]:
        return [Node(i + 1, tuple(float(c) for c in p)) for i, p in enumerate(self.points)]

    @property
    def cell_list(self) -> List[Cell]:
        return [Cell(i + 1, tuple(int(v) + 1 for v in c)) for i, c in enumerate(self.cells)]

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.array(sorted(self.boundary_markers), dtype=np.int64)

    @cached_property
    def _edge_table(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        local = np.array(LOCAL_EDGES[self.dim])
        all_edges = np.sort(self.cells[:, local], axis=2).reshape(-1, 2)
        edges, inverse, counts = np.unique(all_edges, axis=0, return_inverse=True, return_counts=True)
        return edges, np.asarray(inverse).reshape(self.n_cells, len(local)), counts

    @property
    def edges(self) -> np.ndarray:
        """Unique edges (n_edges, 2), vertex indices sorted within each edge."""
        return self._edge_table[0]

    @property
    def cell_edges(self) -> np.ndarray:
        """(n_cells, n_local_edges) edge index of each local edge."""
        return self._edge_table[1]

    @cached_property
    def facet_counts(self) -> Tuple[np.ndarray, np.ndarray]:
        """Facets (vertices in 1D, edges in 2D) with the number of cells sharing each."""
        if self.dim == 1:
            nodes, counts = np.unique(self.cells.ravel(), return_counts=True)
            return nodes[:, None], counts
        edges, _, counts = self._edge_table
        return edges, counts

    @property
    def boundary_facets(self) -> np.ndarray:
        facets, counts = self.facet_counts
        return facets[counts == 1]

    @property
    def boundary_edges(self) -> np.ndarray:
        """Edge indices lying on the boundary (2D only; empty in 1D)."""
        if self.dim == 1:
            return np.zeros(0, dtype=np.int64)
        _, _, counts = self._edge_table
        return np.flatnonzero(counts == 1)

    @cached_property
    def jacobians(self) -> np.ndarray:
        """Affine map matrices B (n_cells, dim, dim); columns are x_i - x_0."""
        p = self.points[self.cells]
        return np.transpose(p[:, 1:, :] - p[:, :1, :], (0, 2, 1))

    @cached_property
    def signed_measures(self) -> np.ndarray:
        return np.linalg.det(self.jacobians) / math.factorial(self.dim)

    @property
    def cell_measures(self) -> np.ndarray:
        return np.abs(self.signed_measures)

    @cached_property
    def cell_diameters(self) -> np.ndarray:
        """h_J: longest edge of each cell."""
        local = np.array(LOCAL_EDGES[self.dim])
        p = self.points[self.cells[:, local]]
        lengths = np.linalg.norm(p[:, :, 1, :] - p[:, :, 0, :], axis=-1)
        return lengths.max(axis=1)

    @property
    def h(self) -> float:
        return float(self.cell_diameters.max())

    @property
    def measure(self) -> float:
        return float(self.cell_measures.sum())


def _topological_boundary(cells: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        nodes, counts = np.unique(cells.ravel(), return_counts=True)
        return nodes[counts == 1]
    local = np.array(LOCAL_EDGES[dim])
    all_edges = np.sort(cells[:, local], axis=2).reshape(-1, 2)
    edges, counts = np.unique(all_edges, axis=0, return_counts=True)
    return np.unique(edges[counts == 1].ravel())


def generate_interval_mesh(n: int, a: float = 0.0, b: float = 1.0) -> Mesh:
    """Uniform partition of [a, b] into n segments."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")
    if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
        raise InvalidArgumentError(f"interval needs a < b, got a={a}, b={b}")
    n = int(n)
    points = np.linspace(a, b, n + 1)[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(points, cells, {0: DIRICHLET_MARKER, n: DIRICHLET_MARKER})


def generate_rect_mesh(
    nx: int,
    ny: int,
    rect: Sequence[float] = (0.0, 1.0, 0.0, 1.0),
) -> Mesh:
    """Structured triangulation of rect = (x0, x1, y0, y1).

    Each grid square is split along its (+,+) diagonal into two counter-clockwise triangles.
    """
    for name, value in (("nx", nx), ("ny", ny)):
        if int(value) != value or value < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {value}")
    if len(rect) != 4:
        raise InvalidArgumentError("rect must be (x0, x1, y0, y1)")
    x0, x1, y0, y1 = (float(v) for v in rect)
    if not np.all(np.isfinite([x0, x1, y0, y1])) or x1 <= x0 or y1 <= y0:
        raise InvalidArgumentError(f"degenerate rectangle {tuple(rect)}")
    nx, ny = int(nx), int(ny)

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    points = np.column_stack([X.ravel(), Y.ravel()])

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (J * (nx + 1) + I).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.stack([lower, upper], axis=1).reshape(-1, 3)

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    on_boundary = ((ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)).ravel()
    markers = {int(i): DIRICHLET_MARKER for i in np.flatnonzero(on_boundary)}
    return Mesh(points, cells, markers)


def _hanging_nodes(mesh: Mesh) -> List[str]:
    facets, counts = mesh.facet_counts
    boundary = facets[counts == 1]
    if len(boundary) == 0:
        return []
    candidates = np.unique(boundary.ravel())
    cand_pts = mesh.points[candidates]
    found = []
    for p, q in boundary:
        a, b = mesh.points[p], mesh.points[q]
        d = b - a
        length_sq = float(d @ d)
        r = cand_pts - a
        cross = d[0] * r[:, 1] - d[1] * r[:, 0]
        along = r @ d
        inside = (
            (np.abs(cross) <= 1e-12 * length_sq)
            & (along > 1e-12 * length_sq)
            & (along < (1 - 1e-12) * length_sq)
        )
        for c in candidates[inside]:
            found.append(f"hanging node {int(c) + 1} on edge ({int(p) + 1}, {int(q) + 1})")
    return found


def validate_mesh(m: Mesh) -> List[str]:
    """Return the list of violated mesh invariants (empty for a valid mesh)."""
    violations: List[str] = []

    if not np.all(np.isfinite(m.points)):
        violations.append("non-finite node coordinates")

    bad = (m.cells < 0) | (m.cells >= m.n_nodes)
    if bad.any():
        for c in np.flatnonzero(bad.any(axis=1)):
            violations.append(f"cell {int(c) + 1} references a missing node")
        return violations

    sorted_cells = np.sort(m.cells, axis=1)
    repeated = (np.diff(sorted_cells, axis=1) == 0).any(axis=1)
    for c in np.flatnonzero(repeated):
        violations.append(f"cell {int(c) + 1} has repeated vertices")

    scale = max(m.h, 1e-300) ** m.dim
    flipped = m.signed_measures <= 1e-14 * scale
    for c in np.flatnonzero(flipped & ~repeated):
        violations.append(
            f"cell {int(c) + 1} is not positively oriented (signed measure {m.signed_measures[c]:.3e})"
        )

    facets, counts = m.facet_counts
    for f, cnt in zip(facets[counts > 2], counts[counts > 2]):
        ids = ", ".join(str(int(v) + 1) for v in f)
        violations.append(f"facet ({ids}) is shared by {int(cnt)} cells")

    if m.dim == 2:
        violations.extend(_hanging_nodes(m))

    used = np.zeros(m.n_nodes, dtype=bool)
    used[m.cells.ravel()] = True
    for i in np.flatnonzero(~used):
        violations.append(f"node {int(i) + 1} is not used by any cell")

    topo = set(int(i) for i in np.unique(m.boundary_facets.ravel()))
    marked = set(m.boundary_markers)
    for i in sorted(topo - marked):
        violations.append(f"boundary node {i + 1} has no marker")
    for i in sorted(marked - topo):
        violations.append(f"node {i + 1} is marked as boundary but is interior")

    if not violations:
        q = mesh_quality(m)
        logger.debug("Mesh quality diam(J)/h in [%.4f, %.4f]", q.min_ratio, q.max_ratio)
        if q.min_ratio < MIN_QUALITY_RATIO:
            logger.warning("Mesh is not quasi-uniform: smallest diam(J)/h = %.4f", q.min_ratio)
    return violations


def mesh_quality(m: Mesh) -> MeshQuality:
    """min/max of diam(J)/h over the cells."""
    ratios = m.cell_diameters / m.h
    return MeshQuality(float(ratios.min()), float(ratios.max()))


def _content_lines(path: Path) -> Iterator[Tuple[int, List[str]]]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("$End"):
                continue
            yield lineno, line.split()


def _parse_int(token: str, path: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MeshParseError(f"expected integer {what}, got {token!r}", path=path, line=lineno) from None


def _parse_float(token: str, path: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MeshParseError(f"expected a coordinate, got {token!r}", path=path, line=lineno) from None
    if not math.isfinite(value):
        raise MeshParseError(f"non-finite coordinate {token!r}", path=path, line=lineno)
    return value


def read_mesh(path: Union[str, Path]) -> Mesh:
    """Parse an ASCII mesh file, fix cell orientation and validate the result."""
    path = Path(path)
    spath = str(path)
    if not path.is_file():
        raise MeshParseError("mesh file not found", path=spath)

    lines = list(_content_lines(path))
    pos = 0
    node_index: Dict[int, int] = {}
    coords: List[List[float]] = []
    cell_rows: List[Tuple[int, int, List[int]]] = []
    file_markers: Dict[int, Tuple[int, int]] = {}
    dim: Optional[int] = None
    seen = set()

    def read_count(section: str) -> int:
        nonlocal pos
        if pos >= len(lines):
            raise MeshParseError(f"missing entry count after {section}", path=spath, line=None)
        lineno, toks = lines[pos]
        pos += 1
        if len(toks) != 1:
            raise MeshParseError(f"expected entry count after {section}", path=spath, line=lineno)
        count = _parse_int(toks[0], spath, lineno, "count")
        if count < 0:
            raise MeshParseError("negative entry count", path=spath, line=lineno)
        return count

    while pos < len(lines):
        lineno, toks = lines[pos]
        pos += 1
        section = toks[0]
        if section not in ("$Nodes", "$Cells", "$Boundary"):
            raise MeshParseError(f"unexpected line {' '.join(toks)!r}", path=spath, line=lineno)
        if section in seen:
            raise MeshParseError(f"duplicate section {section}", path=spath, line=lineno)
        seen.add(section)
        count = read_count(section)
        if pos + count > len(lines):
            raise MeshParseError(f"{section} declares {count} entries but the file ends early", path=spath)
        entries = lines[pos:pos + count]
        pos += count

        if section == "$Nodes":
            for ln, t in entries:
                if dim is None:
                    if len(t) not in (2, 3):
                        raise MeshParseError("node line must be '<id> <x> [<y>]'", path=spath, line=ln)
                    dim = len(t) - 1
                if len(t) != dim + 1:
                    raise MeshParseError(f"expected {dim} coordinate(s)", path=spath, line=ln)
                nid = _parse_int(t[0], spath, ln, "node id")
                if nid in node_index:
                    raise MeshParseError(f"duplicate node id {nid}", path=spath, line=ln)
                node_index[nid] = len(coords)
                coords.append([_parse_float(v, spath, ln) for v in t[1:]])
        elif section == "$Cells":
            cell_ids = set()
            for ln, t in entries:
                cid = _parse_int(t[0], spath, ln, "cell id")
                if cid in cell_ids:
                    raise MeshParseError(f"duplicate cell id {cid}", path=spath, line=ln)
                cell_ids.add(cid)
                cell_rows.append((ln, cid, [_parse_int(v, spath, ln, "vertex id") for v in t[1:]]))
        else:
            for ln, t in entries:
                if len(t) != 2:
                    raise MeshParseError("boundary line must be '<node_id> <marker>'", path=spath, line=ln)
                nid = _parse_int(t[0], spath, ln, "node id")
                if nid in file_markers:
                    raise MeshParseError(f"node {nid} has more than one marker", path=spath, line=ln)
                file_markers[nid] = (ln, _parse_int(t[1], spath, ln, "marker"))

    if "$Nodes" not in seen or "$Cells" not in seen:
        raise MeshParseError("file needs both $Nodes and $Cells sections", path=spath)
    if dim is None:
        raise MeshParseError("mesh has no nodes", path=spath)
    if not cell_rows:
        raise MeshParseError("mesh has no cells", path=spath)

    problems: List[str] = []
    cells = []
    for ln, cid, verts in cell_rows:
        if len(verts) != dim + 1:
            raise MeshParseError(f"cell {cid} needs {dim + 1} vertices", path=spath, line=ln)
        missing = [v for v in verts if v not in node_index]
        if missing:
            problems.extend(f"cell {cid} references missing node {v}" for v in missing)
            continue
        cells.append([node_index[v] for v in verts])
    for nid in file_markers:
        if nid not in node_index:
            problems.append(f"boundary marker for missing node {nid}")
    if problems:
        raise InvalidMeshError(problems)

    points = np.array(coords, dtype=float)
    cell_arr = np.array(cells, dtype=np.int64).reshape(-1, dim + 1)

    # orientation fix
    p = points[cell_arr]
    if dim == 1:
        flip = p[:, 1, 0] < p[:, 0, 0]
        cell_arr[flip] = cell_arr[flip][:, ::-1]
    else:
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        flip = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
        cell_arr[flip] = cell_arr[flip][:, [0, 2, 1]]

    markers = {int(i): DIRICHLET_MARKER for i in _topological_boundary(cell_arr, dim)}
    for nid, (_, marker) in file_markers.items():
        markers[node_index[nid]] = marker

    mesh = Mesh(points, cell_arr, markers)
    violations = validate_mesh(mesh)
    if violations:
        raise InvalidMeshError(violations)
    logger.info("Read mesh %s: %d nodes, %d cells, h=%.4g", path.name, mesh.n_nodes, mesh.n_cells, mesh.h)
    return mesh


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> None:
    """Write the ASCII format with 17 significant digits (exact decimal round-trip)."""
    out = ["# rosenau-fem mesh", "$Nodes", str(mesh.n_nodes)]
    for i, p in enumerate(mesh.points, start=1):
        out.append(" ".join([str(i)] + [format(float(c), ".17g") for c in p]))
    out += ["$Cells", str(mesh.n_cells)]
    for i, c in enumerate(mesh.cells, start=1):
        out.append(" ".join([str(i)] + [str(int(v) + 1) for v in c]))
    out += ["$Boundary", str(len(mesh.boundary_markers))]
    for node in sorted(mesh.boundary_markers):
        out.append(f"{node + 1} {mesh.boundary_markers[node]}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
