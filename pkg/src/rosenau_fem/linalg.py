"""Sparse matrices, 2x2 block composition and the direct solver used by every linear solve."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from rosenau_fem.errors import InvalidArgumentError, SingularMatrixError

logger = logging.getLogger("rosenau_fem.linalg")

SparseMatrix = sp.csr_matrix

# |u_ii| below this fraction of max|a_ij| counts as a zero pivot
PIVOT_RTOL = 1e-13


def as_csr(A) -> SparseMatrix:
    """Canonical CSR copy: sorted column indices, no duplicates, no stored zeros."""
    M = sp.csr_matrix(A, dtype=float, copy=True)
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    return M


def spmv(A: SparseMatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"spmv: matrix is {A.shape}, vector has shape {x.shape}")
    return A @ x


class Factorization:
    """Sparse LU with partial pivoting (SuperLU), reusable across right-hand sides.

    Not safe for concurrent solves; build one per thread.
    """

    def __init__(self, A: SparseMatrix):
        if A.shape[0] != A.shape[1]:
            raise InvalidArgumentError(f"cannot factor a non-square matrix {A.shape}")
        self.shape = A.shape
        A = sp.csc_matrix(A, dtype=float)
        try:
            self._lu = splu(A)
        except RuntimeError as exc:
            raise SingularMatrixError(f"factorization failed: {exc}") from exc

        scale = abs(A).max() if A.nnz else 0.0
        diag = np.abs(self._lu.U.diagonal())
        bad = np.flatnonzero(diag <= PIVOT_RTOL * scale) if scale > 0 else np.arange(A.shape[0])
        if bad.size:
            # U is in the column-permuted order; report the original row of the pivot
            row = int(np.argsort(self._lu.perm_r)[bad[0]])
            raise SingularMatrixError(f"numerically singular pivot at row {row}", pivot_row=row)

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise InvalidArgumentError(f"rhs length {b.shape[0]} does not match matrix {self.shape}")
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("solve produced non-finite values")
        return x


def factor_solve(A: SparseMatrix, b: np.ndarray) -> np.ndarray:
    return Factorization(A).solve(b)


def compose_block(blocks: Sequence[Sequence[Optional[SparseMatrix]]]) -> SparseMatrix:
    """Monolithic CSR matrix of a 2x2 block grid; None means a structural zero block."""
    if len(blocks) != 2 or any(len(row) != 2 for row in blocks):
        raise InvalidArgumentError("compose_block expects a 2x2 grid of blocks")

    def extent(i: int, axis: int) -> int:
        sizes = {
            (blocks[i][j] if axis == 0 else blocks[j][i]).shape[axis]
            for j in range(2)
            if (blocks[i][j] if axis == 0 else blocks[j][i]) is not None
        }
        if len(sizes) != 1:
            raise InvalidArgumentError(f"inconsistent block sizes along axis {axis}: {sorted(sizes)}")
        return sizes.pop()

    rows = [extent(i, 0) for i in range(2)]
    cols = [extent(j, 1) for j in range(2)]
    grid = [
        [blocks[i][j] if blocks[i][j] is not None else sp.csr_matrix((rows[i], cols[j])) for j in range(2)]
        for i in range(2)
    ]
    return as_csr(sp.bmat(grid, format="csr"))


@dataclass(frozen=True)
class BlockSystem:
    """2x2 block operator with conforming blocks."""

    uu: SparseMatrix
    up: SparseMatrix
    pu: SparseMatrix
    pp: SparseMatrix

    def __post_init__(self) -> None:
        n_u, n_p = self.uu.shape[0], self.pp.shape[0]
        expected = {"uu": (n_u, n_u), "up": (n_u, n_p), "pu": (n_p, n_u), "pp": (n_p, n_p)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InvalidArgumentError(f"block {name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def sizes(self):
        return self.uu.shape[0], self.pp.shape[0]

    def assemble(self) -> SparseMatrix:
        return compose_block([[self.uu, self.up], [self.pu, self.pp]])


def write_matrix_market(A: SparseMatrix, path: Union[str, Path]) -> Path:
    """Coordinate real general MatrixMarket file, 1-based indices."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), field="real", symmetry="general")
    logger.info("Wrote %dx%d matrix (%d nnz) to %s", A.shape[0], A.shape[1], A.nnz, path)
    return path
