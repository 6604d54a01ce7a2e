"""
On-disk formats for matrices and problems.

Matrix file (``matrix.txt``)::

    # comment lines are ignored
    m n mode
    <row 0>
    ...

``mode`` is ``dense``, ``sparse`` or ``mixed``. A dense row is n
whitespace-separated floats; a sparse row is ``idx:val`` pairs with strictly
increasing 0-based indices. In ``mixed`` mode each line is read as sparse
when it contains a colon. Floats are written with ``repr`` so a write/read
cycle is exact.

Problem directory: ``matrix.txt`` plus a ``problem.json`` sidecar holding
b̃, σ, the seed and, unless withheld, x_true and b.
"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from noisy_kaczmarz.common.errors import FileFormatError, NoisyKaczmarzError
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.core.linalg import RowLike, RowMatrix, SparseRow
from noisy_kaczmarz.solver import Problem

logger = get_logger(__name__)

MATRIX_FILE = "matrix.txt"
SIDECAR_FILE = "problem.json"
SIDECAR_VERSION = "1"

MatrixMode = Literal["dense", "sparse", "mixed"]
PathLike = Union[str, Path]


def _fmt(value: float) -> str:
    return repr(float(value))


def _matrix_mode(mat: RowMatrix) -> MatrixMode:
    sparse = [isinstance(row, SparseRow) for row in mat.rows]
    if all(sparse):
        return "sparse"
    if not any(sparse):
        return "dense"
    return "mixed"


def write_matrix(mat: RowMatrix, path: PathLike) -> Path:
    """Write ``mat`` in the text format; returns the path written."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{mat.m} {mat.n} {_matrix_mode(mat)}"]
    for row in mat.rows:
        if isinstance(row, SparseRow):
            lines.append(" ".join(f"{int(j)}:{_fmt(v)}" for j, v in zip(row.indices, row.values)))
        else:
            lines.append(" ".join(_fmt(v) for v in row))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {mat!r} to {out}")
    return out


def _parse_sparse(tokens: List[str], lineno: int) -> SparseRow:
    indices = []
    values = []
    for token in tokens:
        idx, sep, val = token.partition(":")
        if not sep:
            raise FileFormatError(f"line {lineno}: expected idx:val, got '{token}'")
        try:
            indices.append(int(idx))
            values.append(float(val))
        except ValueError as e:
            raise FileFormatError(f"line {lineno}: bad sparse entry '{token}'") from e
    return SparseRow(np.asarray(indices, dtype=np.int64), np.asarray(values, dtype=np.float64))


def _parse_dense(tokens: List[str], n: int, lineno: int) -> np.ndarray:
    if len(tokens) != n:
        raise FileFormatError(f"line {lineno}: expected {n} values, got {len(tokens)}")
    try:
        return np.asarray([float(t) for t in tokens], dtype=np.float64)
    except ValueError as e:
        raise FileFormatError(f"line {lineno}: non-numeric value") from e


def _parse_header(line: str, lineno: int) -> Tuple[int, int, MatrixMode]:
    parts = line.split()
    if len(parts) != 3:
        raise FileFormatError(f"line {lineno}: header must be 'm n mode', got '{line.strip()}'")
    try:
        m, n = int(parts[0]), int(parts[1])
    except ValueError as e:
        raise FileFormatError(f"line {lineno}: m and n must be integers") from e
    if m < 1 or n < 1:
        raise FileFormatError(f"line {lineno}: m and n must be positive")
    mode = parts[2]
    if mode not in ("dense", "sparse", "mixed"):
        raise FileFormatError(f"line {lineno}: unknown mode '{mode}'")
    return m, n, mode  # type: ignore[return-value]


def read_matrix(path: PathLike) -> RowMatrix:
    """
    Read a matrix file.

    Raises:
        FileNotFoundError: missing file.
        FileFormatError: malformed header or rows, wrong row count, zero rows.
    """
    src = Path(path)
    header: Optional[Tuple[int, int, MatrixMode]] = None
    rows: List[RowLike] = []
    with open(src, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if header is None:
                header = _parse_header(stripped, lineno)
                continue
            m, n, mode = header
            tokens = stripped.split()
            sparse = mode == "sparse" or (mode == "mixed" and ":" in stripped)
            if mode == "dense" and ":" in stripped:
                raise FileFormatError(f"line {lineno}: sparse entry in a dense matrix file")
            rows.append(_parse_sparse(tokens, lineno) if sparse else _parse_dense(tokens, n, lineno))
    if header is None:
        raise FileFormatError(f"{src}: missing header")
    m, n, _ = header
    if len(rows) != m:
        raise FileFormatError(f"{src}: header declares {m} rows, found {len(rows)}")
    try:
        return RowMatrix(rows, n)
    except NoisyKaczmarzError as e:
        raise FileFormatError(f"{src}: {e.message}") from e


class ProblemSidecar(BaseModel):
    """JSON companion of a matrix file."""

    format_version: str = Field(default=SIDECAR_VERSION)
    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    sigma: float = Field(..., ge=0.0)
    seed: Optional[int] = Field(default=None)
    noise: Optional[str] = Field(default=None)
    b_tilde: List[float]
    x_true: Optional[List[float]] = Field(default=None)
    b: Optional[List[float]] = Field(default=None)


def write_problem(
    problem: Problem,
    directory: PathLike,
    seed: Optional[int] = None,
    noise: Optional[str] = None,
    include_truth: bool = True,
) -> Tuple[Path, Path]:
    """
    Write ``matrix.txt`` and ``problem.json`` into ``directory``.

    With ``include_truth=False`` x_true and b are withheld and the problem
    reads back in real-data mode.
    """
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    matrix_path = write_matrix(problem.A, target / MATRIX_FILE)
    sidecar = ProblemSidecar(
        m=problem.m,
        n=problem.n,
        sigma=problem.sigma,
        seed=seed,
        noise=noise,
        b_tilde=[float(v) for v in problem.b_tilde],
        x_true=None if not include_truth or problem.x_true is None else [float(v) for v in problem.x_true],
        b=None if not include_truth or problem.b is None else [float(v) for v in problem.b],
    )
    sidecar_path = target / SIDECAR_FILE
    sidecar_path.write_text(
        json.dumps(sidecar.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    logger.info(f"Wrote problem m={problem.m} n={problem.n} to {target}")
    return matrix_path, sidecar_path


def read_sidecar(directory: PathLike) -> ProblemSidecar:
    path = Path(directory) / SIDECAR_FILE
    try:
        return ProblemSidecar.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise FileFormatError(f"{path}: {e.error_count()} invalid field(s): {e.errors()[0]['msg']}") from e


def read_problem(directory: PathLike) -> Problem:
    """
    Load a problem directory written by ``write_problem``.

    Raises:
        FileFormatError: malformed files or inconsistent dimensions.
    """
    target = Path(directory)
    A = read_matrix(target / MATRIX_FILE)
    sidecar = read_sidecar(target)
    if (sidecar.m, sidecar.n) != A.shape:
        raise FileFormatError(
            f"sidecar declares {sidecar.m}x{sidecar.n} but matrix is {A.m}x{A.n}"
        )
    try:
        return Problem(
            A=A,
            b_tilde=np.asarray(sidecar.b_tilde),
            x_true=None if sidecar.x_true is None else np.asarray(sidecar.x_true),
            b=None if sidecar.b is None else np.asarray(sidecar.b),
            sigma=sidecar.sigma,
        )
    except NoisyKaczmarzError as e:
        raise FileFormatError(f"{target}: {e.message}") from e
