import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from rosenau_fem.errors import InvalidArgumentError, SingularMatrixError
from rosenau_fem.linalg import (
    BlockSystem,
    Factorization,
    as_csr,
    compose_block,
    factor_solve,
    spmv,
    write_matrix_market,
)


def _random_sparse(rng, n, m=None, density=0.3):
    A = sp.random(n, m or n, density=density, random_state=rng, format="csr")
    return A + sp.eye(n, m or n, format="csr") * (n if m is None else 0)


def test_spmv_identity_and_zero(rng):
    x = rng.standard_normal(6)
    np.testing.assert_array_equal(spmv(sp.identity(6, format="csr"), x), x)
    np.testing.assert_array_equal(spmv(sp.csr_matrix((6, 6)), x), 0.0)


def test_spmv_matches_dense(rng):
    A = _random_sparse(rng, 8, 5)
    x = rng.standard_normal(5)
    np.testing.assert_allclose(spmv(A, x), A.toarray() @ x, rtol=1e-14)


def test_spmv_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        spmv(sp.identity(3, format="csr"), np.ones(4))


def test_as_csr_is_canonical():
    A = sp.csr_matrix((np.array([1.0, 2.0, 0.0]), np.array([1, 1, 0]), np.array([0, 3, 3])), shape=(2, 2))
    C = as_csr(A)
    assert C.has_canonical_format
    assert C.nnz == 1
    assert C[0, 1] == 3.0


def test_factor_solve_recovers_solution(rng):
    A = _random_sparse(rng, 30)
    x = rng.standard_normal(30)
    np.testing.assert_allclose(factor_solve(A, A @ x), x, rtol=1e-10)


def test_factorization_reused_for_several_rhs(rng):
    A = _random_sparse(rng, 12)
    lu = Factorization(A)
    for _ in range(3):
        x = rng.standard_normal(12)
        np.testing.assert_allclose(lu.solve(A @ x), x, rtol=1e-10)


def test_solve_needs_row_pivoting():
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(factor_solve(A, np.array([2.0, 3.0])), [3.0, 2.0])


def test_singular_matrix_is_reported():
    A = sp.csr_matrix(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.0, 1.0, 1.0]]))
    with pytest.raises(SingularMatrixError):
        Factorization(A)


def test_zero_matrix_is_singular():
    with pytest.raises(SingularMatrixError) as info:
        Factorization(sp.csr_matrix((3, 3)))
    assert "pivot" in str(info.value) or "factorization failed" in str(info.value)


def test_non_square_factorization_is_rejected():
    with pytest.raises(InvalidArgumentError):
        Factorization(sp.csr_matrix((3, 2)))


def test_solve_rejects_wrong_rhs_length():
    with pytest.raises(InvalidArgumentError):
        Factorization(sp.identity(3, format="csr")).solve(np.ones(2))


def test_compose_block_matches_dense(rng):
    a, b = _random_sparse(rng, 4), _random_sparse(rng, 4, 3)
    c, d = _random_sparse(rng, 3, 4), _random_sparse(rng, 3)
    M = compose_block([[a, b], [c, d]])
    expected = np.block([[a.toarray(), b.toarray()], [c.toarray(), d.toarray()]])
    np.testing.assert_array_equal(M.toarray(), expected)
    assert M.has_canonical_format


def test_compose_block_with_zero_block():
    I2, I3 = sp.identity(2, format="csr"), sp.identity(3, format="csr")
    B = sp.csr_matrix(np.ones((2, 3)))
    M = compose_block([[I2, B], [None, I3]])
    assert M.shape == (5, 5)
    np.testing.assert_array_equal(M.toarray()[2:, :2], 0.0)


def test_compose_block_rejects_inconsistent_sizes():
    with pytest.raises(InvalidArgumentError):
        compose_block([[sp.identity(2), sp.csr_matrix((3, 3))], [None, sp.identity(3)]])


def test_block_system_shapes():
    uu, pp = sp.identity(4, format="csr"), sp.identity(2, format="csr")
    up, pu = sp.csr_matrix((4, 2)), sp.csr_matrix((2, 4))
    system = BlockSystem(uu, up, pu, pp)
    assert system.sizes == (4, 2)
    assert system.assemble().shape == (6, 6)
    with pytest.raises(InvalidArgumentError):
        BlockSystem(uu, pu, up, pp)


def test_matrix_market_file(tmp_path):
    A = sp.csr_matrix(np.array([[4.0, 0.0, -1.0], [0.0, 2.5, 0.0]]))
    path = write_matrix_market(A, tmp_path / "dump" / "J.mtx")
    text = path.read_text()
    assert text.startswith("%%MatrixMarket matrix coordinate real general")
    back = scipy.io.mmread(str(path))
    np.testing.assert_array_equal(back.toarray(), A.toarray())
