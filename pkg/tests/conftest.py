from pathlib import Path

import numpy as np
import pytest

from rosenau_fem.mesh import generate_interval_mesh, generate_rect_mesh

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"
MESH_DIR = REPO_ROOT / "src" / "data" / "meshes"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def interval_mesh():
    return generate_interval_mesh(8)


@pytest.fixture
def square_mesh():
    return generate_rect_mesh(4, 4)


@pytest.fixture
def unit_triangle():
    from rosenau_fem.mesh import Mesh

    return Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]], {0: 1, 1: 1, 2: 1})
