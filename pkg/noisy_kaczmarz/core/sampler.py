"""
Row selection policies.

``RowSampler`` draws row indices without replacement with probability
proportional to their weights (squared row norms), using a Fenwick tree over
the live weights. ``InOrderSampler`` emits 0, 1, ..., m-1.

Random streams come from ``make_rng``: a Philox counter-based generator keyed
by a ``SeedSequence`` built from integer keys such as
(master_seed, trial_index, stream_id). Streams are bit-identical across
platforms for the same key.
"""

from enum import Enum
from typing import Iterator, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from noisy_kaczmarz.common.errors import ParameterError, RowIndexError
from noisy_kaczmarz.common.logger import get_logger

logger = get_logger(__name__)

SeedKey = Union[int, Sequence[int]]
SeedLike = Union[SeedKey, np.random.Generator]

# Rebuild the tree from live weights once the live mass falls below this
# fraction of the mass at the last rebuild.
_REBUILD_FRACTION = 1e-6

# Draws landing on a dead slot are repeated this many times before falling
# back to a neighbouring live index.
_MAX_REDRAWS = 8


def make_rng(seed: SeedLike) -> np.random.Generator:
    """
    Philox generator for an integer key or a tuple of integer keys.

    A Generator passed in is returned unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    keys = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    if not keys or any(int(k) < 0 for k in keys):
        raise ParameterError(f"seed keys must be non-negative integers, got {seed!r}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in keys])))


class FenwickTree:
    """
    Cumulative-weight index over positions 0..size-1.

    ``find(u)`` returns the smallest position whose inclusive prefix sum
    exceeds ``u``.
    """

    def __init__(self, weights: npt.ArrayLike):
        values = np.asarray(weights, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ParameterError("FenwickTree needs a non-empty 1-D weight vector")
        self._size = int(values.size)
        self._tree = np.zeros(self._size + 1)
        self._values = np.zeros(self._size)
        self._top = 1
        while self._top * 2 <= self._size:
            self._top *= 2
        self._build(values)

    def _build(self, values: npt.NDArray[np.float64]) -> None:
        tree = np.zeros(self._size + 1)
        tree[1:] = values
        for j in range(1, self._size + 1):
            parent = j + (j & -j)
            if parent <= self._size:
                tree[parent] += tree[j]
        self._tree = tree
        self._values = values.astype(np.float64, copy=True)

    def __len__(self) -> int:
        return self._size

    def rebuild(self) -> None:
        """Recompute every node from the stored point weights."""
        self._build(self._values)

    def weight(self, i: int) -> float:
        return float(self._values[i])

    def add(self, i: int, delta: float) -> None:
        if not (0 <= i < self._size):
            raise RowIndexError(f"position {i} out of range [0, {self._size})")
        self._values[i] += delta
        j = i + 1
        while j <= self._size:
            self._tree[j] += delta
            j += j & -j

    def set(self, i: int, value: float) -> None:
        self.add(i, value - self._values[i])

    def prefix_sum(self, i: int) -> float:
        """Sum of weights at positions 0..i inclusive."""
        if not (0 <= i < self._size):
            raise RowIndexError(f"position {i} out of range [0, {self._size})")
        j = i + 1
        s = 0.0
        while j > 0:
            s += self._tree[j]
            j -= j & -j
        return s

    @property
    def total(self) -> float:
        return self.prefix_sum(self._size - 1)

    def find(self, u: float) -> int:
        j = 0
        s = u
        half = self._top
        while half > 0:
            k = j + half
            if k <= self._size and self._tree[k] <= s:
                j = k
                s -= self._tree[k]
            half >>= 1
        return j


class RowSampler:
    """
    Weighted sampling without replacement.

    Each draw picks a live index with probability proportional to its weight
    among the live indices, then zeroes its weight. ``next()`` returns None
    once all m indices have been drawn.
    """

    def __init__(self, weights: npt.ArrayLike, seed: SeedLike):
        values = np.asarray(weights, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ParameterError("sampler needs a non-empty 1-D weight vector")
        bad = np.flatnonzero(~(np.isfinite(values) & (values > 0.0)))
        if bad.size:
            raise ParameterError(
                f"weight {int(bad[0])} is {values[bad[0]]!r}; all weights must be positive"
            )
        self._tree = FenwickTree(values)
        self._alive = np.ones(values.size, dtype=bool)
        self._remaining = int(values.size)
        self._rng = make_rng(seed)
        self._mass_at_build = float(values.sum())

    @property
    def remaining(self) -> int:
        return self._remaining

    def __len__(self) -> int:
        return len(self._tree)

    def _fallback(self, idx: int) -> int:
        # Only reached after _MAX_REDRAWS dead hits in a row, i.e. when the
        # rounding residue left on dead slots outweighs the live mass.
        live = np.flatnonzero(self._alive)
        before = live[live <= idx]
        return int(before[-1]) if before.size else int(live[0])

    def _draw(self, total: float) -> int:
        """
        Find the slot under a uniform draw in [0, total).

        A draw on a dead slot (rounding residue in the partial sums) is
        redrawn, so live indices keep their relative probabilities.
        """
        idx = len(self._tree)
        for _ in range(_MAX_REDRAWS):
            idx = self._tree.find(self._rng.random() * total)
            if idx < len(self._tree) and self._alive[idx]:
                return idx
        logger.debug(f"sampler fell back after {_MAX_REDRAWS} dead draws (total={total!r})")
        return self._fallback(min(idx, len(self._tree) - 1))

    def next(self) -> Optional[int]:
        if self._remaining == 0:
            return None
        total = self._tree.total
        if total < _REBUILD_FRACTION * self._mass_at_build or total <= 0.0:
            self._tree.rebuild()
            total = self._tree.total
            self._mass_at_build = total
        idx = self._draw(total)
        self._tree.set(idx, 0.0)
        self._alive[idx] = False
        self._remaining -= 1
        return idx

    def draw_pass(self) -> list[int]:
        """Draw every remaining index."""
        out = []
        while (idx := self.next()) is not None:
            out.append(idx)
        return out

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        idx = self.next()
        if idx is None:
            raise StopIteration
        return idx


class InOrderSampler:
    """Deterministic stream 0, 1, ..., m-1."""

    def __init__(self, m: int):
        if m < 1:
            raise ParameterError(f"m must be >= 1, got {m}")
        self._m = m
        self._k = 0

    @property
    def remaining(self) -> int:
        return self._m - self._k

    def next(self) -> Optional[int]:
        if self._k >= self._m:
            return None
        self._k += 1
        return self._k - 1

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        idx = self.next()
        if idx is None:
            raise StopIteration
        return idx


def in_order_policy(m: int) -> Iterator[int]:
    """Row indices 0..m-1 in order."""
    return iter(InOrderSampler(m))


class SamplerKind(str, Enum):
    WEIGHTED = "weighted"
    IN_ORDER = "in-order"


def make_sampler(
    kind: Union[SamplerKind, str], weights: npt.ArrayLike, seed: SeedLike
) -> Union[RowSampler, InOrderSampler]:
    kind = SamplerKind(kind)
    if kind is SamplerKind.IN_ORDER:
        return InOrderSampler(int(np.asarray(weights).size))
    return RowSampler(weights, seed)


def derive_seed(*keys: int) -> int:
    """A 63-bit integer seed derived from a tuple of non-negative integer keys."""
    if not keys or any(int(k) < 0 for k in keys):
        raise ParameterError(f"seed keys must be non-negative integers, got {keys!r}")
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(1, dtype=np.uint64)
    return int(state[0]) >> 1
