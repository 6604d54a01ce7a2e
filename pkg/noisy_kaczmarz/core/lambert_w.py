"""
Principal branch of the Lambert-W function.

``lambert_w0`` solves w·e^w = x by Halley iteration. ``lambert_w_exp``
evaluates W(e^ξ) by solving w + ln w = ξ directly, so the error bound can be
evaluated at exponents far beyond the floating-point range of e^ξ.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import numpy.typing as npt

from noisy_kaczmarz.common.errors import ConvergenceError, DomainError, ParameterError
from noisy_kaczmarz.common.logger import get_logger

logger = get_logger(__name__)

DEFAULT_TOL = 1e-12
MAX_ITERATIONS = 100
BRANCH_POINT = -math.exp(-1.0)
BRANCH_SLACK = 1e-12

_EPS = np.finfo(float).eps
# Below this exponent W(e^xi) = e^xi - e^(2 xi) to double precision.
_TINY_EXPONENT = -40.0
# Branch-point series is used as the answer when sqrt(2(ex+1)) is this small.
_SERIES_ONLY_P = 1e-2


@dataclass(frozen=True)
class WEvalReport:
    """
    Result of a principal-branch evaluation.

    Attributes:
        value: W0(x), always >= -1.
        iterations: Halley steps taken (0 when a closed form or series was exact enough).
        residual: |w·e^w - x| / max(|x|, 1).
    """

    value: float
    iterations: int
    residual: float


def _check_tol(tol: float) -> None:
    if not (tol > 0.0) or not math.isfinite(tol):
        raise ParameterError(f"tol must be positive and finite, got {tol}")


def _relative_residual(w: float, x: float) -> float:
    return abs(w * math.exp(w) - x) / max(abs(x), 1.0)


def _branch_series(p: float) -> float:
    """W0 near -1/e in powers of p = sqrt(2(e·x + 1))."""
    return (
        -1.0
        + p
        - p * p / 3.0
        + 11.0 / 72.0 * p**3
        - 43.0 / 540.0 * p**4
        + 769.0 / 17280.0 * p**5
        - 221.0 / 8505.0 * p**6
    )


def _initial_guess(x: float) -> float:
    if x < -0.25:
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if abs(x) < 0.25:
        return x - x * x + 1.5 * x**3
    if x < 3.0:
        return math.log1p(x)
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def lambert_w0(x: float, tol: float = DEFAULT_TOL) -> WEvalReport:
    """
    Evaluate the principal branch W0(x) for real x >= -1/e.

    Args:
        x: Argument. Values up to 1e-12 below -1/e are treated as the branch point.
        tol: Required relative residual |w·e^w - x| / max(|x|, 1).

    Returns:
        WEvalReport with the value, Halley iteration count and residual.

    Raises:
        DomainError: x is NaN, infinite, or below -1/e by more than the slack.
        ConvergenceError: Halley iteration did not settle within the cap.
    """
    _check_tol(tol)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"lambert_w0 needs a finite argument, got {x}")
    if x < BRANCH_POINT:
        if x >= BRANCH_POINT - BRANCH_SLACK:
            return WEvalReport(value=-1.0, iterations=0, residual=_relative_residual(-1.0, x))
        raise DomainError(f"lambert_w0 argument {x!r} is below the branch point -1/e")
    if x == 0.0:
        return WEvalReport(value=0.0, iterations=0, residual=0.0)

    if x < -0.25:
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        if p < _SERIES_ONLY_P:
            w = max(_branch_series(p), -1.0)
            return WEvalReport(value=w, iterations=0, residual=_relative_residual(w, x))

    w = _initial_guess(x)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 2.0 * _EPS * max(abs(x), 1.0):
            converged = True
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4.0 * _EPS * (1.0 + abs(w)):
            converged = True
            break

    w = max(w, -1.0)
    residual = _relative_residual(w, x)
    if not converged and residual > tol:
        raise ConvergenceError(
            f"Halley iteration for W0({x!r}) did not converge in {MAX_ITERATIONS} steps "
            f"(last residual {residual:.3e})"
        )
    if residual > tol:
        raise ConvergenceError(
            f"W0({x!r}) residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    logger.debug(f"lambert_w0({x!r}) = {w!r} after {iterations} Halley steps")
    return WEvalReport(value=w, iterations=iterations, residual=residual)


def _exp_bracket(xi: float) -> tuple[float, float]:
    if xi >= 1.0:
        return 1.0, xi
    return math.exp(xi - 1.0), min(1.0, math.exp(xi))


def lambert_w_exp(xi: float, tol: float = DEFAULT_TOL) -> float:
    """
    Evaluate W(e^xi) without forming e^xi.

    Solves w + ln(w) = xi by Newton's method, safeguarded by the bracket
    [1, xi] (xi >= 1) or [e^(xi-1), 1] (xi < 1).

    Args:
        xi: Any finite real exponent.
        tol: Relative step size at which the iteration stops.

    Returns:
        The positive root w.

    Raises:
        DomainError: xi is not finite.
        ConvergenceError: Newton iteration did not settle within the cap.
    """
    _check_tol(tol)
    xi = float(xi)
    if not math.isfinite(xi):
        raise DomainError(f"lambert_w_exp needs a finite exponent, got {xi}")
    if xi < _TINY_EXPONENT:
        y = math.exp(xi)
        return y - y * y
    if xi == 1.0:
        return 1.0

    lo, hi = _exp_bracket(xi)
    w = xi - math.log(xi) if xi > 1.0 else math.exp(xi)
    w = min(max(w, lo), hi)
    threshold = max(tol, 4.0 * _EPS)
    for _ in range(MAX_ITERATIONS):
        w_new = w * (1.0 - math.log(w) + xi) / (1.0 + w)
        if not (lo <= w_new <= hi):
            w_new = 0.5 * (lo + hi)
        g = w_new + math.log(w_new) - xi
        if g > 0.0:
            hi = min(hi, w_new)
        elif g < 0.0:
            lo = max(lo, w_new)
        step = abs(w_new - w)
        w = w_new
        if g == 0.0 or step <= threshold * w:
            return w
    raise ConvergenceError(f"Newton iteration for W(e^{xi!r}) did not converge")


def lambert_w_exp_array(
    xi: Union[npt.ArrayLike, float], tol: float = DEFAULT_TOL
) -> npt.NDArray[np.float64]:
    """
    Vectorized ``lambert_w_exp`` over an array of exponents.

    Raises:
        DomainError: any exponent is not finite.
        ConvergenceError: some entries did not settle within the cap.
    """
    _check_tol(tol)
    xi_arr = np.asarray(xi, dtype=np.float64)
    if not np.all(np.isfinite(xi_arr)):
        raise DomainError("lambert_w_exp_array needs finite exponents")
    out = np.empty_like(xi_arr)

    tiny = xi_arr < _TINY_EXPONENT
    if np.any(tiny):
        y = np.exp(xi_arr[tiny])
        out[tiny] = y - y * y

    rest = ~tiny
    if not np.any(rest):
        return out
    x = xi_arr[rest]
    big = x >= 1.0
    lo = np.where(big, 1.0, np.exp(np.minimum(x, 1.0) - 1.0))
    hi = np.where(big, x, np.minimum(1.0, np.exp(np.minimum(x, 1.0))))
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(x > 1.0, x - np.log(np.maximum(x, 1.0)), np.exp(np.minimum(x, 1.0)))
    w = np.clip(w, lo, hi)
    threshold = max(tol, 4.0 * _EPS)
    for _ in range(MAX_ITERATIONS):
        w_new = w * (1.0 - np.log(w) + x) / (1.0 + w)
        outside = (w_new < lo) | (w_new > hi)
        w_new = np.where(outside, 0.5 * (lo + hi), w_new)
        g = w_new + np.log(w_new) - x
        hi = np.where(g > 0.0, np.minimum(hi, w_new), hi)
        lo = np.where(g < 0.0, np.maximum(lo, w_new), lo)
        done = np.abs(w_new - w) <= threshold * w_new
        w = w_new
        if np.all(done | (g == 0.0)):
            out[rest] = w
            return out
    raise ConvergenceError("vectorized Newton iteration for W(e^xi) did not converge")
