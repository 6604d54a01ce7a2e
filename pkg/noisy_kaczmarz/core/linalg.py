"""
Row-oriented matrix storage and the few dense kernels the solver needs.

A ``RowMatrix`` holds each row either as a dense float vector or as a
``SparseRow`` of sorted coordinates, and caches the squared row norms.
It is immutable after construction and can be shared across threads.
"""

import math
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from noisy_kaczmarz.common.errors import (
    ConvergenceError,
    DimensionMismatchError,
    ErrorCode,
    ParameterError,
    RowIndexError,
)
from noisy_kaczmarz.common.logger import get_logger

logger = get_logger(__name__)

FloatArray = npt.NDArray[np.float64]

DEFAULT_SPARSE_THRESHOLD = 0.5
JACOBI_MAX_SWEEPS = 100


class SparseRow(NamedTuple):
    """Sorted column indices and the matching nonzero values."""

    indices: npt.NDArray[np.int64]
    values: FloatArray


Row = Union[FloatArray, SparseRow]
RowLike = Union[Row, Sequence[float], tuple[Sequence[int], Sequence[float]]]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _coerce_row(row: RowLike, n: int, i: int) -> Row:
    if isinstance(row, SparseRow) or (
        isinstance(row, tuple) and len(row) == 2 and not np.isscalar(row[0])
    ):
        indices = np.asarray(row[0], dtype=np.int64)
        values = np.asarray(row[1], dtype=np.float64)
        if indices.ndim != 1 or indices.shape != values.shape:
            raise DimensionMismatchError(f"row {i}: sparse indices and values differ in shape")
        if indices.size and (indices[0] < 0 or indices[-1] >= n):
            raise ParameterError(f"row {i}: sparse index out of range [0, {n})")
        if indices.size > 1 and np.any(np.diff(indices) <= 0):
            raise ParameterError(f"row {i}: sparse indices must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ParameterError(f"row {i}: non-finite entry")
        return SparseRow(_readonly(indices.copy()), _readonly(values.copy()))

    dense = np.array(row, dtype=np.float64)
    if dense.shape != (n,):
        raise DimensionMismatchError(f"row {i}: expected {n} values, got shape {dense.shape}")
    if not np.all(np.isfinite(dense)):
        raise ParameterError(f"row {i}: non-finite entry")
    return _readonly(dense)


def _row_norm2(row: Row) -> float:
    values = row.values if isinstance(row, SparseRow) else row
    return float(np.dot(values, values))


class RowMatrix:
    """
    An m × n matrix stored row by row.

    Attributes:
        m: Number of rows.
        n: Number of columns.
        rows: Tuple of rows (dense ndarray or SparseRow).
        row_norm2: Read-only array of squared Euclidean row norms.
    """

    __slots__ = ("_rows", "_n", "_row_norm2")

    def __init__(self, rows: Iterable[RowLike], n: int):
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        coerced = tuple(_coerce_row(row, n, i) for i, row in enumerate(rows))
        if not coerced:
            raise ParameterError("a RowMatrix needs at least one row")
        norms = np.array([_row_norm2(row) for row in coerced], dtype=np.float64)
        zero = np.flatnonzero(norms <= 0.0)
        if zero.size:
            raise ParameterError(
                f"row {int(zero[0])} is zero; every row needs a positive norm",
                code=ErrorCode.ZERO_ROW,
            )
        self._rows = coerced
        self._n = n
        self._row_norm2 = _readonly(norms)

    @classmethod
    def from_dense(
        cls, array: npt.ArrayLike, sparse_threshold: float = DEFAULT_SPARSE_THRESHOLD
    ) -> "RowMatrix":
        """
        Build from a 2-D array; rows whose density is at most
        ``sparse_threshold`` are stored sparse.
        """
        dense = np.asarray(array, dtype=np.float64)
        if dense.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D array, got {dense.ndim} dimensions")
        n = dense.shape[1]
        rows: list[RowLike] = []
        for row in dense:
            nz = np.flatnonzero(row)
            if nz.size <= sparse_threshold * n:
                rows.append(SparseRow(nz.astype(np.int64), row[nz]))
            else:
                rows.append(row)
        return cls(rows, n)

    @classmethod
    def from_rows(cls, rows: Iterable[RowLike], n: int) -> "RowMatrix":
        return cls(rows, n)

    @property
    def m(self) -> int:
        return len(self._rows)

    @property
    def n(self) -> int:
        return self._n

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self._n

    @property
    def rows(self) -> tuple[Row, ...]:
        return self._rows

    @property
    def row_norm2(self) -> FloatArray:
        return self._row_norm2

    @property
    def nnz(self) -> int:
        return sum(
            row.indices.size if isinstance(row, SparseRow) else int(np.count_nonzero(row))
            for row in self._rows
        )

    def __len__(self) -> int:
        return self.m

    def __repr__(self) -> str:
        return f"RowMatrix(m={self.m}, n={self.n}, nnz={self.nnz})"

    def _check_index(self, i: int) -> None:
        if not (0 <= i < self.m):
            raise RowIndexError(f"row index {i} out of range [0, {self.m})")

    def row(self, i: int) -> Row:
        self._check_index(i)
        return self._rows[i]

    def is_sparse(self, i: int) -> bool:
        return isinstance(self.row(i), SparseRow)

    def dense_row(self, i: int) -> FloatArray:
        row = self.row(i)
        if isinstance(row, SparseRow):
            out = np.zeros(self._n)
            out[row.indices] = row.values
            return out
        return row.copy()

    def to_dense(self) -> FloatArray:
        out = np.zeros((self.m, self._n))
        for i, row in enumerate(self._rows):
            if isinstance(row, SparseRow):
                out[i, row.indices] = row.values
            else:
                out[i] = row
        return out

    def drop_rows(self, indices: Iterable[int]) -> "RowMatrix":
        """Copy of the matrix without the given rows."""
        drop = set()
        for i in indices:
            self._check_index(i)
            drop.add(i)
        return RowMatrix([row for i, row in enumerate(self._rows) if i not in drop], self._n)


def _check_vector(mat: RowMatrix, v: FloatArray) -> None:
    if v.shape != (mat.n,):
        raise DimensionMismatchError(f"vector has shape {v.shape}, matrix has {mat.n} columns")


def row_dot(mat: RowMatrix, i: int, v: npt.ArrayLike) -> float:
    """⟨a_i, v⟩."""
    vec = np.asarray(v, dtype=np.float64)
    _check_vector(mat, vec)
    row = mat.row(i)
    if isinstance(row, SparseRow):
        return float(np.dot(row.values, vec[row.indices]))
    return float(np.dot(row, vec))


def axpy_row(
    x: npt.ArrayLike, mat: RowMatrix, i: int, coeff: float, *, inplace: bool = False
) -> FloatArray:
    """
    x + coeff·a_i.

    A sparse row touches only its nonzero coordinates. With ``inplace=True``
    ``x`` must be a float64 array and is updated and returned.
    """
    if inplace:
        if not isinstance(x, np.ndarray) or x.dtype != np.float64:
            raise ParameterError("inplace axpy_row needs a float64 ndarray")
        out = x
    else:
        out = np.array(x, dtype=np.float64)
    _check_vector(mat, out)
    row = mat.row(i)
    if coeff == 0.0:
        return out
    if isinstance(row, SparseRow):
        out[row.indices] += coeff * row.values
    else:
        out += coeff * row
    return out


def frobenius_norm2(mat: RowMatrix) -> float:
    """‖A‖_F², the sum of the cached squared row norms."""
    return float(np.sum(mat.row_norm2))


def matvec(mat: RowMatrix, x: npt.ArrayLike) -> FloatArray:
    """A·x computed row by row."""
    vec = np.asarray(x, dtype=np.float64)
    _check_vector(mat, vec)
    return np.array([row_dot(mat, i, vec) for i in range(mat.m)])


def gram_matrix(mat: RowMatrix) -> FloatArray:
    """AᵀA as a dense n × n array, accumulated from rank-one row terms."""
    g = np.zeros((mat.n, mat.n))
    for row in mat.rows:
        if isinstance(row, SparseRow):
            idx = row.indices
            g[np.ix_(idx, idx)] += np.outer(row.values, row.values)
        else:
            g += np.outer(row, row)
    return g


def jacobi_eigenvalues(
    symmetric: npt.ArrayLike, tol: float = 1e-12, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> FloatArray:
    """
    Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
    below ``tol``·‖G‖_F.

    Returns:
        Eigenvalues in ascending order.

    Raises:
        ConvergenceError: more than ``max_sweeps`` sweeps were needed.
    """
    g = np.array(symmetric, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {g.shape}")
    if not np.allclose(g, g.T, rtol=1e-12, atol=0.0):
        raise ParameterError("jacobi_eigenvalues needs a symmetric matrix")
    size = g.shape[0]
    scale = float(np.linalg.norm(g))
    if size == 1 or scale == 0.0:
        return np.sort(np.diag(g).copy())

    def off_norm() -> float:
        return float(np.linalg.norm(g - np.diag(np.diag(g))))

    for sweep in range(max_sweeps):
        if off_norm() <= tol * scale:
            logger.debug(f"Jacobi converged after {sweep} sweeps (n={size})")
            return np.sort(np.diag(g).copy())
        for p in range(size - 1):
            for q in range(p + 1, size):
                gpq = g[p, q]
                if gpq == 0.0:
                    continue
                tau = (g[q, q] - g[p, p]) / (2.0 * gpq)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = g[:, p].copy()
                col_q = g[:, q].copy()
                g[:, p] = c * col_p - s * col_q
                g[:, q] = s * col_p + c * col_q
                row_p = g[p, :].copy()
                row_q = g[q, :].copy()
                g[p, :] = c * row_p - s * row_q
                g[q, :] = s * row_p + c * row_q
                g[p, q] = g[q, p] = 0.0
    if off_norm() <= tol * scale:
        return np.sort(np.diag(g).copy())
    raise ConvergenceError(f"Jacobi eigenvalue iteration did not converge in {max_sweeps} sweeps")


def _min_gram_eigenvalue(mat: RowMatrix, tol: float) -> Optional[float]:
    if mat.m < mat.n:
        logger.debug(f"matrix is {mat.m} x {mat.n} with m < n; no left inverse")
        return None
    eigenvalues = jacobi_eigenvalues(gram_matrix(mat), tol=tol)
    return max(float(eigenvalues[0]), 0.0)


def min_singular_value(mat: RowMatrix, tol: float = 1e-12) -> float:
    """
    Smallest singular value σ_min(A) = 1/‖A⁻¹‖, from the smallest
    eigenvalue of AᵀA. Returns 0.0 for m < n or rank-deficient matrices.
    """
    lam = _min_gram_eigenvalue(mat, tol)
    return 0.0 if lam is None else math.sqrt(lam)


def eta_of(mat: RowMatrix, tol: float = 1e-12) -> float:
    """η = κ(A)⁻² = σ_min(A)² / ‖A‖_F²."""
    lam = _min_gram_eigenvalue(mat, tol)
    if lam is None:
        return 0.0
    return lam / frobenius_norm2(mat)
