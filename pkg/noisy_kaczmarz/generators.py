"""
Synthetic problem ensembles.

Rows are drawn uniformly from a unit sphere: either dense on S^{n-1}, or
with exactly s nonzeros whose values are uniform on S^{s-1} and whose
support is a uniformly random size-s subset of the columns. The ground
truth has i.i.d. standard normal entries and the noise ε_i has mean 0 and
variance σ²‖a_i‖² (normal or Rademacher).

Each spec draws from three independent Philox streams keyed by
(seed, 0) for the matrix, (seed, 1) for the signal and (seed, 2) for the noise.
"""

from typing import Literal, Optional

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from noisy_kaczmarz.common.errors import DimensionMismatchError, ParameterError
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.core.linalg import DEFAULT_SPARSE_THRESHOLD, RowLike, RowMatrix, SparseRow, matvec
from noisy_kaczmarz.core.sampler import make_rng
from noisy_kaczmarz.solver import Problem

logger = get_logger(__name__)

STREAM_MATRIX = 0
STREAM_SIGNAL = 1
STREAM_NOISE = 2

EnsembleKind = Literal["sparse-sphere", "dense-sphere"]
NoiseKind = Literal["normal", "rademacher"]


class EnsembleSpec(BaseModel):
    """
    Description of a random problem.

    Attributes:
        kind: "sparse-sphere" or "dense-sphere".
        m: Number of rows.
        n: Number of columns.
        s: Nonzeros per row (sparse-sphere only).
        sigma: Noise scale σ.
        seed: Non-negative integer seed.
        noise: "normal" (default) or "rademacher".
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: EnsembleKind = Field(default="sparse-sphere", description="Row ensemble")
    m: int = Field(..., ge=1, description="Number of rows")
    n: int = Field(..., ge=1, description="Number of columns")
    s: Optional[int] = Field(default=None, ge=1, description="Nonzeros per row (sparse-sphere)")
    sigma: float = Field(default=0.0, ge=0.0, description="Noise scale")
    seed: int = Field(default=0, ge=0, description="Seed")
    noise: NoiseKind = Field(default="normal", description="Noise distribution")

    @model_validator(mode="after")
    def validate_support(self) -> "EnsembleSpec":
        if self.kind == "sparse-sphere":
            if self.s is None:
                raise ValueError("sparse-sphere ensemble needs s (nonzeros per row)")
            if self.s > self.n:
                raise ValueError(f"s = {self.s} exceeds n = {self.n}")
        return self


def _unit(values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return values / np.linalg.norm(values)


def gen_sparse_sphere(spec: EnsembleSpec) -> RowMatrix:
    """Rows with exactly s nonzeros, values uniform on S^{s-1}, uniform support."""
    if spec.kind != "sparse-sphere" or spec.s is None:
        raise ParameterError(f"gen_sparse_sphere needs a sparse-sphere spec, got {spec.kind}")
    if spec.s > spec.n:
        raise ParameterError(f"s = {spec.s} exceeds n = {spec.n}")
    rng = make_rng((spec.seed, STREAM_MATRIX))
    store_dense = spec.s > DEFAULT_SPARSE_THRESHOLD * spec.n
    rows: list[RowLike] = []
    for _ in range(spec.m):
        support = np.sort(rng.choice(spec.n, size=spec.s, replace=False)).astype(np.int64)
        values = _unit(rng.standard_normal(spec.s))
        if store_dense:
            dense = np.zeros(spec.n)
            dense[support] = values
            rows.append(dense)
        else:
            rows.append(SparseRow(support, values))
    return RowMatrix(rows, spec.n)


def gen_dense_sphere(spec: EnsembleSpec) -> RowMatrix:
    """Rows i.i.d. uniform on S^{n-1}."""
    if spec.kind != "dense-sphere":
        raise ParameterError(f"gen_dense_sphere needs a dense-sphere spec, got {spec.kind}")
    rng = make_rng((spec.seed, STREAM_MATRIX))
    g = rng.standard_normal((spec.m, spec.n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return RowMatrix(list(g), spec.n)


def gen_matrix(spec: EnsembleSpec) -> RowMatrix:
    if spec.kind == "sparse-sphere":
        return gen_sparse_sphere(spec)
    return gen_dense_sphere(spec)


def gen_signal(n: int, seed: int) -> npt.NDArray[np.float64]:
    """n i.i.d. standard normal entries."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return make_rng((seed, STREAM_SIGNAL)).standard_normal(n)


def make_problem(
    A: RowMatrix,
    x: npt.ArrayLike,
    sigma: float,
    seed: int,
    noise: NoiseKind = "normal",
) -> Problem:
    """
    Bundle A, x, b = Ax and b̃ = b + ε with ε_i of standard deviation σ‖a_i‖.

    Raises:
        DimensionMismatchError: len(x) != A.n.
        ParameterError: sigma < 0 or unknown noise kind.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    if x_arr.shape != (A.n,):
        raise DimensionMismatchError(f"x has shape {x_arr.shape}, expected ({A.n},)")
    if not sigma >= 0.0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    b = matvec(A, x_arr)
    rng = make_rng((seed, STREAM_NOISE))
    scale = sigma * np.sqrt(A.row_norm2)
    if noise == "normal":
        eps = scale * rng.standard_normal(A.m)
    elif noise == "rademacher":
        eps = scale * (2.0 * rng.integers(0, 2, size=A.m) - 1.0)
    else:
        raise ParameterError(f"unknown noise kind '{noise}'")
    b_tilde = b + eps if sigma > 0.0 else b.copy()
    return Problem(A=A, b_tilde=b_tilde, x_true=x_arr, b=b, sigma=float(sigma))


def generate_problem(spec: EnsembleSpec) -> Problem:
    """Matrix, signal and noise for a spec; identical specs give identical problems."""
    A = gen_matrix(spec)
    x = gen_signal(spec.n, spec.seed)
    problem = make_problem(A, x, spec.sigma, spec.seed, spec.noise)
    logger.debug(f"Generated {spec.kind} problem m={spec.m} n={spec.n} seed={spec.seed}")
    return problem
