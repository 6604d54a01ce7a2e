"""
Relaxed randomized Kaczmarz iteration.

    x_{k+1} = x_k + α_k (b̃_i - ⟨a_i, x_k⟩) / ‖a_i‖² · a_i

with i = i_k drawn by a row sampler and α_k supplied by a rate policy. When
the problem carries its ground truth the trace records ‖x_k - x‖² at every
step; otherwise (real-data mode) only residuals are recorded.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Union

import numpy as np
import numpy.typing as npt

from noisy_kaczmarz.common.errors import DimensionMismatchError, ErrorCode, ParameterError
from noisy_kaczmarz.common.logger import get_logger
from noisy_kaczmarz.core.linalg import RowMatrix, SparseRow, matvec, row_dot
from noisy_kaczmarz.core.sampler import SamplerKind, SeedLike, make_sampler
from noisy_kaczmarz.policies.base import BaseRatePolicy

logger = get_logger(__name__)

FloatArray = npt.NDArray[np.float64]

CONSISTENCY_RTOL = 1e-10
UNIT_NORM_TOL = 1e-8


def _vector(name: str, value: npt.ArrayLike, length: int) -> FloatArray:
    arr = np.array(value, dtype=np.float64)
    if arr.shape != (length,):
        raise DimensionMismatchError(f"{name} has shape {arr.shape}, expected ({length},)")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Problem:
    """
    A noisy linear system Ax = b, b̃ = b + ε.

    Attributes:
        A: System matrix.
        b_tilde: Observed right-hand side.
        x_true: Ground truth, or None in real-data mode.
        b: Clean right-hand side A·x_true; computed when x_true is given alone.
        sigma: Noise scale (ε_i has variance σ²‖a_i‖²).
    """

    A: RowMatrix
    b_tilde: FloatArray
    x_true: Optional[FloatArray] = None
    b: Optional[FloatArray] = None
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.sigma) or self.sigma < 0.0:
            raise ParameterError(f"sigma must be finite and >= 0, got {self.sigma}")
        object.__setattr__(self, "b_tilde", _vector("b_tilde", self.b_tilde, self.A.m))
        if self.x_true is not None:
            object.__setattr__(self, "x_true", _vector("x_true", self.x_true, self.A.n))
        if self.b is not None:
            object.__setattr__(self, "b", _vector("b", self.b, self.A.m))
        if self.x_true is not None:
            computed = matvec(self.A, self.x_true)
            if self.b is None:
                computed.setflags(write=False)
                object.__setattr__(self, "b", computed)
            else:
                gap = float(np.linalg.norm(computed - self.b))
                if gap > CONSISTENCY_RTOL * max(float(np.linalg.norm(self.b)), 1e-300):
                    raise ParameterError(
                        f"clean system is inconsistent: ‖A·x_true - b‖ = {gap:.3e}"
                    )

    @property
    def m(self) -> int:
        return self.A.m

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def has_ground_truth(self) -> bool:
        return self.x_true is not None

    @property
    def noise(self) -> Optional[FloatArray]:
        if self.b is None:
            return None
        return self.b_tilde - self.b


def _step_inplace(x: FloatArray, A: RowMatrix, i: int, b_tilde_i: float, alpha: float) -> float:
    """Apply one update to ``x``; returns the residual b̃_i - ⟨a_i, x⟩ before the step."""
    row = A.row(i)
    if isinstance(row, SparseRow):
        residual = b_tilde_i - float(np.dot(row.values, x[row.indices]))
        if alpha != 0.0:
            x[row.indices] += (alpha * residual / A.row_norm2[i]) * row.values
    else:
        residual = b_tilde_i - float(np.dot(row, x))
        if alpha != 0.0:
            x += (alpha * residual / A.row_norm2[i]) * row
    return residual


def kaczmarz_step(
    x: npt.ArrayLike, A: RowMatrix, i: int, b_tilde_i: float, alpha: float
) -> FloatArray:
    """
    One relaxed projection step; returns a new iterate.

    With alpha = 1 and exact data the i-th equation holds afterwards.
    """
    if not math.isfinite(alpha):
        raise ParameterError(f"alpha must be finite, got {alpha}")
    out = np.array(x, dtype=np.float64)
    if out.shape != (A.n,):
        raise DimensionMismatchError(f"iterate has shape {out.shape}, expected ({A.n},)")
    _step_inplace(out, A, i, float(b_tilde_i), float(alpha))
    return out


@dataclass
class SolveTrace:
    """
    Per-iteration record of one solve.

    ``rows``, ``alphas`` and ``residuals`` have one entry per step taken;
    ``sq_errors`` has one more (the initial error first) and is None in
    real-data mode.
    """

    policy: str
    sampler: str
    seed: Any
    rows: npt.NDArray[np.int64]
    alphas: FloatArray
    residuals: FloatArray
    sq_errors: Optional[FloatArray]
    x_final: FloatArray
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return int(self.rows.shape[0])

    def __len__(self) -> int:
        return self.iterations

    def records(self) -> Iterator[Dict[str, Any]]:
        """
        One dict per step (k, row, alpha, sq_error, residual), followed by a
        final record for k = K holding only the final squared error.
        """
        for k in range(self.iterations):
            yield {
                "k": k,
                "row": int(self.rows[k]),
                "alpha": float(self.alphas[k]),
                "sq_error": None if self.sq_errors is None else float(self.sq_errors[k]),
                "residual": float(self.residuals[k]),
            }
        yield {
            "k": self.iterations,
            "row": None,
            "alpha": None,
            "sq_error": None if self.sq_errors is None else float(self.sq_errors[-1]),
            "residual": None,
        }

    def to_columns(self) -> Dict[str, List[Any]]:
        columns: Dict[str, List[Any]] = {"k": [], "row": [], "alpha": [], "sq_error": [], "residual": []}
        for record in self.records():
            for key, value in record.items():
                columns[key].append(value)
        return columns


def solve(
    p: Problem,
    policy: BaseRatePolicy,
    sampler_kind: Union[SamplerKind, str] = SamplerKind.WEIGHTED,
    seed: SeedLike = 0,
    k_max: Optional[int] = None,
    x0: Optional[npt.ArrayLike] = None,
) -> SolveTrace:
    """
    Run the relaxed Kaczmarz iteration for ``k_max`` steps.

    Args:
        p: Problem to solve.
        policy: Learning-rate policy.
        sampler_kind: "weighted" (without replacement, ∝ ‖a_i‖²) or "in-order".
        seed: Seed key or Generator for the row sampler.
        k_max: Number of steps; defaults to m and may not exceed it.
        x0: Initial iterate, default 0.

    Raises:
        ParameterError: k_max > m or negative; the policy cannot cover k_max.
        DimensionMismatchError: x0 has the wrong length.
    """
    k_max = p.m if k_max is None else int(k_max)
    if k_max < 0:
        raise ParameterError(f"k_max must be >= 0, got {k_max}")
    if k_max > p.m:
        raise ParameterError(
            f"k_max = {k_max} exceeds the {p.m} rows available without replacement",
            code=ErrorCode.K_MAX_EXCEEDS_ROWS,
        )
    policy.check_horizon(k_max)
    kind = SamplerKind(sampler_kind)

    x = np.zeros(p.n) if x0 is None else np.array(_vector("x0", x0, p.n))
    sampler = make_sampler(kind, p.A.row_norm2, seed)
    rates = policy.rates()

    rows = np.empty(k_max, dtype=np.int64)
    alphas = np.empty(k_max)
    residuals = np.empty(k_max)
    sq_errors: Optional[FloatArray] = None
    x_true = p.x_true
    if x_true is not None:
        sq_errors = np.empty(k_max + 1)
        diff = x - x_true
        sq_errors[0] = float(np.dot(diff, diff))

    b_tilde = p.b_tilde
    for k, alpha in zip(range(k_max), rates):
        i = sampler.next()
        if i is None:
            raise ParameterError(f"sampler exhausted after {k} draws")
        rows[k] = i
        alphas[k] = alpha
        residuals[k] = _step_inplace(x, p.A, i, float(b_tilde[i]), alpha)
        if sq_errors is not None and x_true is not None:
            diff = x - x_true
            sq_errors[k + 1] = float(np.dot(diff, diff))

    if isinstance(seed, np.random.Generator):
        seed_repr: Any = "generator"
    else:
        seed_repr = seed if isinstance(seed, int) else list(seed)
    return SolveTrace(
        policy=policy.name,
        sampler=kind.value,
        seed=seed_repr,
        rows=rows,
        alphas=alphas,
        residuals=residuals,
        sq_errors=sq_errors,
        x_final=x,
    )


@dataclass(frozen=True)
class StepAudit:
    """
    Both sides of the one-step error identities.

    Attributes:
        pythagorean_residual: relative gap in
            ‖x - x_{k+1}‖² = ‖x - x_k‖² - ‖y - x_k‖² + ‖y - x_{k+1}‖².
        decomposition_residual: relative gap in
            ‖x - x_{k+1}‖² = ‖x - x_k‖² - (2α - α²)‖y - x_k‖² + Z_k.
        z_k: the noise term Z_k.
        y_next: projection of x_k onto the clean hyperplane ⟨a_i, x⟩ = b_i.
        x_next: the iterate after the step.
        sq_error_before: ‖x - x_k‖².
        sq_error_after: ‖x - x_{k+1}‖².
    """

    pythagorean_residual: float
    decomposition_residual: float
    z_k: float
    y_next: FloatArray
    x_next: FloatArray
    sq_error_before: float
    sq_error_after: float


def _relative_gap(lhs: float, rhs: float, *magnitudes: float) -> float:
    scale = abs(lhs) + sum(abs(v) for v in magnitudes)
    if scale == 0.0:
        return abs(lhs - rhs)
    return abs(lhs - rhs) / scale


def step_identity_audit(
    p: Problem,
    x_k: npt.ArrayLike,
    i: int,
    alpha: float,
    b_tilde_i: Optional[float] = None,
) -> StepAudit:
    """
    Check the exact one-step identities behind the error bound.

    Args:
        p: Problem with ground truth and clean right-hand side.
        x_k: Iterate before the step.
        i: Row used by the step.
        alpha: Learning rate of the step.
        b_tilde_i: Noisy observation to use; defaults to ``p.b_tilde[i]``.
    """
    if p.x_true is None or p.b is None:
        raise ParameterError("step_identity_audit needs a problem with ground truth")
    x = p.x_true
    xk = _vector("x_k", x_k, p.n)
    observed = float(p.b_tilde[i]) if b_tilde_i is None else float(b_tilde_i)
    eps = observed - float(p.b[i])
    norm2 = float(p.A.row_norm2[i])
    norm = math.sqrt(norm2)

    x_next = kaczmarz_step(xk, p.A, i, observed, alpha)
    a = p.A.dense_row(i)
    clean_residual = float(p.b[i]) - row_dot(p.A, i, xk)
    d = (clean_residual / norm2) * a
    y = xk + d

    err_before = float(np.dot(x - xk, x - xk))
    err_after = float(np.dot(x - x_next, x - x_next))
    proj = float(np.dot(d, d))
    y_gap = float(np.dot(y - x_next, y - x_next))

    pyth_rhs = err_before - proj + y_gap
    linear = -2.0 * alpha * (1.0 - alpha) * (eps / norm) * float(np.dot(d, a / norm))
    z_k = linear + alpha * alpha * eps * eps / norm2
    shrink = (2.0 * alpha - alpha * alpha) * proj
    decomp_rhs = err_before - shrink + z_k

    return StepAudit(
        pythagorean_residual=_relative_gap(err_after, pyth_rhs, err_before, proj, y_gap),
        decomposition_residual=_relative_gap(err_after, decomp_rhs, err_before, shrink, z_k),
        z_k=z_k,
        y_next=y,
        x_next=x_next,
        sq_error_before=err_before,
        sq_error_after=err_after,
    )


def projection_terms(A: RowMatrix, z: npt.ArrayLike) -> FloatArray:
    """|⟨z, a_i/‖a_i‖⟩|² for every row."""
    vec = np.asarray(z, dtype=np.float64)
    if vec.shape != (A.n,):
        raise DimensionMismatchError(f"z has shape {vec.shape}, expected ({A.n},)")
    dots = matvec(A, vec)
    return dots * dots / A.row_norm2


def empirical_eta(
    A: RowMatrix, z: npt.ArrayLike, weights: Optional[npt.ArrayLike] = None
) -> float:
    """
    Weighted average of |⟨z, a_i/‖a_i‖⟩|² with weights ∝ ‖a_i‖² by default.

    Raises:
        ParameterError: z is not a unit vector or weights are not positive.
        DimensionMismatchError: z or weights have the wrong length.
    """
    vec = np.asarray(z, dtype=np.float64)
    if vec.shape != (A.n,):
        raise DimensionMismatchError(f"z has shape {vec.shape}, expected ({A.n},)")
    if abs(float(np.linalg.norm(vec)) - 1.0) > UNIT_NORM_TOL:
        raise ParameterError("z must have unit norm")
    w = A.row_norm2 if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (A.m,):
        raise DimensionMismatchError(f"weights have shape {w.shape}, expected ({A.m},)")
    if np.any(w < 0.0) or not np.any(w > 0.0):
        raise ParameterError("weights must be non-negative with a positive sum")
    return float(np.dot(w, projection_terms(A, vec)) / np.sum(w))
