"""Bitstrings and the standard bit mutation operator.

Positions are 1-based in the public API (0-based internally).  ``BitString``
values are immutable and safe to share between threads.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .rng import RngStream


class BitString:
    """Fixed-length genome of n bits."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        arr = np.ascontiguousarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bits must be a non-empty 1-d sequence")
        if arr.max(initial=0) > 1:
            raise ValueError("bits must be 0/1 valued")
        arr = arr.copy()
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def from01(cls, s: str) -> "BitString":
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls(np.ones(n, dtype=np.uint8))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @property
    def n(self) -> int:
        return self._bits.size

    @property
    def bits(self) -> np.ndarray:
        """Read-only 0-based uint8 view of the genome."""
        return self._bits

    def bit(self, pos: int) -> int:
        """Value of the bit at 1-based position ``pos``."""
        if not 1 <= pos <= self.n:
            raise IndexError(f"position {pos} out of range 1..{self.n}")
        return int(self._bits[pos - 1])

    def with_flips(self, flips: Iterable[int]) -> "BitString":
        """New BitString with the given 1-based positions flipped."""
        idx = _as_positions(flips, self.n)
        out = self._bits.copy()
        out[idx] ^= 1
        return BitString(out)

    def to01(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __repr__(self) -> str:
        s = self.to01()
        return f"BitString({s if self.n <= 32 else s[:29] + '...'})"


class Density(NamedTuple):
    """Exact zero-bit density: ``zeros / size``."""

    zeros: int
    size: int

    @property
    def value(self) -> float:
        return self.zeros / self.size


def _as_positions(positions: Iterable[int], n: int) -> np.ndarray:
    """Validate 1-based positions and convert to a 0-based index array."""
    idx = np.asarray(list(positions) if not isinstance(positions, np.ndarray) else positions,
                     dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > n):
        raise IndexError(f"positions must lie in 1..{n}")
    return idx - 1


def onemax(x: BitString) -> int:
    """Number of one-bits in x."""
    return int(x.bits.sum())


def zero_count(x: BitString, index_set: Iterable[int]) -> Density:
    """Zero-bit count of x on a non-empty 1-based index set."""
    idx = _as_positions(index_set, x.n)
    if idx.size == 0:
        raise ValueError("index set must be non-empty")
    return Density(int(idx.size - x.bits[idx].sum()), int(idx.size))


def density(x: BitString, index_set: Iterable[int]) -> float:
    """Fraction of zero-bits of x inside the index set."""
    return zero_count(x, index_set).value


def random_bitstring(n: int, rng: RngStream) -> BitString:
    """Uniform random n-bit string (each bit 1 with probability 1/2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return BitString(rng.gen.integers(0, 2, size=n, dtype=np.uint8))


def sample_distinct(rng: RngStream, n: int, k: int) -> np.ndarray:
    """Sorted uniform k-subset of {0, ..., n-1} as a 0-based array.

    Rejection sampling for small k (collisions are rare); permutation
    fallback otherwise.  Both paths are exactly uniform over k-subsets.
    """
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k > n:
        raise ValueError("k must be <= n")
    if 4 * k * k <= n:
        while True:
            pos = rng.gen.integers(0, n, size=k)
            if k == 1 or np.unique(pos).size == k:
                pos.sort()
                return pos.astype(np.int64)
    return np.sort(rng.gen.permutation(n)[:k]).astype(np.int64)


def standard_mutation(x: BitString, c: float, rng: RngStream):
    """Flip each bit independently with probability c/n.

    Sampled as k ~ Binomial(n, c/n) followed by a uniform k-subset of
    positions, which is distributionally identical.  Returns the offspring
    and the sorted 1-based flip positions.
    """
    n = x.n
    if not 0 <= c <= n:
        raise ValueError(f"mutation parameter must satisfy 0 <= c <= n, got {c}")
    k = int(rng.gen.binomial(n, c / n)) if c > 0 else 0
    idx0 = sample_distinct(rng, n, k)
    flips = tuple(int(j) + 1 for j in idx0)
    if k == 0:
        return x, flips
    out = x.bits.copy()
    out[idx0] ^= 1
    return BitString(out), flips
