import math

import numpy as np
import pytest

from rosenau_fem.errors import InvalidArgumentError, InvalidMeshError, MeshParseError
from rosenau_fem.mesh import (
    Mesh,
    generate_interval_mesh,
    generate_rect_mesh,
    mesh_quality,
    read_mesh,
    validate_mesh,
    write_mesh,
)

from conftest import MESH_DIR


def test_interval_mesh_layout():
    mesh = generate_interval_mesh(4)
    assert mesh.dim == 1
    assert mesh.n_nodes == 5
    assert mesh.n_cells == 4
    np.testing.assert_allclose(mesh.points[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])
    assert list(mesh.boundary_nodes) == [0, 4]
    assert mesh.h == pytest.approx(0.25)
    assert validate_mesh(mesh) == []


def test_single_cell_interval():
    mesh = generate_interval_mesh(1, 0.0, 1.0)
    assert mesh.n_cells == 1
    assert len(mesh.boundary_nodes) == 2


def test_interval_mesh_spacing_is_one_over_n():
    assert generate_interval_mesh(64).h == pytest.approx(1 / 64)


@pytest.mark.parametrize("args", [(0,), (-3,), (4, 1.0, 1.0), (4, 2.0, 1.0)])
def test_interval_mesh_rejects_bad_input(args):
    with pytest.raises(InvalidArgumentError):
        generate_interval_mesh(*args)


def test_rect_mesh_single_square():
    mesh = generate_rect_mesh(1, 1)
    assert mesh.n_cells == 2
    assert mesh.n_nodes == 4
    assert mesh.h == pytest.approx(math.sqrt(2.0))
    assert validate_mesh(mesh) == []


def test_rect_mesh_facet_counts():
    mesh = generate_rect_mesh(16, 16)
    assert mesh.n_cells == 512
    assert validate_mesh(mesh) == []
    _, counts = mesh.facet_counts
    assert counts.max() == 2
    assert int(np.sum(counts == 1)) == 4 * 16
    assert mesh.measure == pytest.approx(1.0)


def test_rect_mesh_on_wide_rectangle():
    mesh = generate_rect_mesh(2, 1, (0.0, 2.0, 0.0, 1.0))
    assert mesh.n_cells == 4
    assert mesh.h == pytest.approx(math.sqrt(2.0))
    assert mesh.measure == pytest.approx(2.0)


def test_rect_mesh_cells_are_counter_clockwise():
    mesh = generate_rect_mesh(3, 5)
    assert np.all(mesh.signed_measures > 0)
    q = mesh_quality(mesh)
    assert q.max_ratio == pytest.approx(1.0)


@pytest.mark.parametrize("rect", [(0.0, 0.0, 0.0, 1.0), (0.0, 1.0, 1.0, 0.0), (0.0, 1.0)])
def test_rect_mesh_rejects_degenerate_rectangle(rect):
    with pytest.raises(InvalidArgumentError):
        generate_rect_mesh(2, 2, rect)


def test_flipped_triangle_is_reported():
    mesh = Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 2, 1]], {0: 1, 1: 1, 2: 1})
    violations = validate_mesh(mesh)
    assert any("not positively oriented" in v for v in violations)


def test_hanging_node_is_reported():
    points = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]]
    cells = [[0, 1, 2], [1, 3, 4], [4, 3, 2]]
    mesh = Mesh(points, cells, {i: 1 for i in range(5)})
    violations = validate_mesh(mesh)
    assert any("hanging node 5" in v for v in violations)


def test_missing_boundary_marker_is_reported():
    mesh = generate_rect_mesh(2, 2)
    markers = dict(mesh.boundary_markers)
    markers.pop(0)
    broken = Mesh(mesh.points, mesh.cells, markers)
    assert "boundary node 1 has no marker" in validate_mesh(broken)


def test_write_then_read_reproduces_mesh(tmp_path):
    mesh = generate_rect_mesh(3, 2, (0.0, 0.3, -1.0, 0.7))
    path = tmp_path / "rect.mesh"
    write_mesh(mesh, path)
    back = read_mesh(path)
    np.testing.assert_array_equal(back.points, mesh.points)
    np.testing.assert_array_equal(back.cells, mesh.cells)
    assert back.boundary_markers == mesh.boundary_markers


def test_read_mesh_skips_comments_and_fixes_orientation(tmp_path):
    path = tmp_path / "tri.mesh"
    path.write_text(
        "# one clockwise triangle\n"
        "\n"
        "$Nodes\n3\n"
        "1 0 0\n2 1 0\n3 0 1\n"
        "$Cells\n1\n"
        "1 1 3 2\n",
        encoding="utf-8",
    )
    mesh = read_mesh(path)
    assert mesh.signed_measures[0] == pytest.approx(0.5)
    assert list(mesh.boundary_nodes) == [0, 1, 2]


def test_duplicate_node_id_names_file_and_line(tmp_path):
    path = tmp_path / "dup.mesh"
    path.write_text("$Nodes\n2\n1 0\n1 1\n$Cells\n1\n1 1 2\n", encoding="utf-8")
    with pytest.raises(MeshParseError) as info:
        read_mesh(path)
    assert info.value.line == 4
    assert f"{path}:4: duplicate node id 1" in str(info.value)


def test_bad_coordinate_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("$Nodes\n2\n1 0\n2 one\n$Cells\n1\n1 1 2\n", encoding="utf-8")
    with pytest.raises(MeshParseError):
        read_mesh(path)


def test_cell_with_missing_node_is_invalid(tmp_path):
    path = tmp_path / "missing.mesh"
    path.write_text("$Nodes\n2\n1 0\n2 1\n$Cells\n1\n1 1 7\n", encoding="utf-8")
    with pytest.raises(InvalidMeshError) as info:
        read_mesh(path)
    assert "cell 1 references missing node 7" in info.value.violations


def test_missing_file_names_path(tmp_path):
    path = tmp_path / "nope.mesh"
    with pytest.raises(MeshParseError) as info:
        read_mesh(path)
    assert str(path) in str(info.value)


def test_sample_meshes_are_conforming():
    lshape = read_mesh(MESH_DIR / "lshape.mesh")
    assert lshape.measure == pytest.approx(0.75)
    assert validate_mesh(lshape) == []

    disk = read_mesh(MESH_DIR / "disk.mesh")
    assert disk.measure == pytest.approx(2.0 * math.sqrt(2.0))
    assert len(disk.boundary_nodes) == 8
