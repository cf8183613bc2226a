"""Deterministic random streams and the pinned seed-mixing function.

All randomness in this package flows through ``RngStream`` objects that are
keyed by a 64-bit ``(master_seed, stream_id)`` pair.  Sub-seeds (per level,
per sweep run, ...) are derived with :func:`mix64`, a splitmix64-based hash
combiner, so any piece of a large experiment can be regenerated in isolation.

The generator algorithm is numpy's PCG64, which is pinned by numpy's backward
compatibility policy; reference output vectors are frozen in the test suite.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX_INIT = 0x6A09E667F3BCC909  # fractional bits of sqrt(2)


def splitmix64(state: int) -> int:
    """One output of the splitmix64 generator for the given state."""
    z = (state + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Combine integers into a single 64-bit sub-seed.

    Order-sensitive: ``mix64(a, b) != mix64(b, a)`` in general.  Negative
    inputs are reduced mod 2^64.
    """
    if not parts:
        raise ValueError("mix64 needs at least one input")
    h = _MIX_INIT
    for p in parts:
        h = splitmix64(h ^ (int(p) & _MASK64))
    return h


class RngStream:
    """Single-owner deterministic random stream.

    Identical ``(master_seed, stream_id)`` pairs produce identical output
    sequences.  Parallel code derives disjoint streams with :meth:`spawn`
    instead of sharing one stream.
    """

    __slots__ = ("master_seed", "stream_id", "gen")

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.gen = np.random.Generator(np.random.PCG64(mix64(self.master_seed, self.stream_id)))

    def spawn(self, stream_id: int) -> "RngStream":
        """Derive an independent stream from the same master seed."""
        return RngStream(self.master_seed, stream_id)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"
