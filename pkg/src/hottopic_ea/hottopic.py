"""HotTopic instances and exact, incrementally-updatable fitness evaluation.

A HotTopic function is built from L random index sets A_i (the "hot topics")
with nested subsets B_i that define the level of a search point.  Fitness is
represented as the lexicographic triple ``(level, hot, rest)``; for alpha < 1
this order coincides exactly with the scalar
``level*n^2 + n*sum_{A_{level+1}} x_i + sum_{R_{level+1}} x_i``
because ``hot*n + rest <= n + floor(alpha*n)*(n-1) < n^2``.

Level thresholds are evaluated in integer arithmetic: a point is on level l'
iff its zero-count on B_{l'} is at most ``tau_{l'} = floor(eps * |B_{l'}|)``
with eps parsed as an exact decimal, so there is no float drift at the
boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence, TextIO

import numpy as np

from .core import BitString
from .rng import mix64

DEFAULT_MAX_CELLS = 100_000_000  # cap on L * |A_i| for materialized instances


class FitnessValue(NamedTuple):
    """Lexicographic fitness triple (level, ones on next hot topic, rest)."""

    level: int
    hot: int
    rest: int

    def scalar(self, n: int) -> int:
        """Exact big-integer scalar of the original fitness definition."""
        return self.level * n * n + self.hot * n + self.rest


@dataclass(frozen=True)
class HotTopicParams:
    """Parameters of a HotTopic instance.

    ``epsilon`` is interpreted as the exact decimal given by its repr, so
    e.g. 0.05 means exactly 1/20 when thresholds are computed.
    """

    n: int
    alpha: float
    beta: float
    epsilon: float
    L: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.beta < self.alpha < 1:
            raise ValueError("need 0 < beta < alpha < 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("need 0 < epsilon < 1")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.size_b < 1:
            raise ValueError(f"floor(beta*n) = {self.size_b} must be >= 1")

    @property
    def size_a(self) -> int:
        return int(self.alpha * self.n)

    @property
    def size_b(self) -> int:
        return int(self.beta * self.n)

    @property
    def epsilon_exact(self) -> Fraction:
        return Fraction(repr(self.epsilon))


def _csr_membership(sets: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-position membership index: CSR arrays (indptr, level data, 0-based)."""
    if not sets:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    pos = np.concatenate(sets)
    lev = np.concatenate([np.full(s.size, i, dtype=np.int64) for i, s in enumerate(sets)])
    order = np.argsort(pos, kind="stable")
    counts = np.bincount(pos, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, lev[order]


@dataclass
class HotTopicInstance:
    """Materialized HotTopic instance: sets, thresholds, membership indexes.

    Immutable after generation; safe to share read-only across runs.
    ``A[i]``/``B[i]`` hold the 0-based sorted index sets of level i+1.
    """

    params: HotTopicParams
    A: list[np.ndarray]
    B: list[np.ndarray]
    tau: np.ndarray
    _memberA: tuple[np.ndarray, np.ndarray] = field(repr=False)
    _memberB: tuple[np.ndarray, np.ndarray] = field(repr=False)
    # dense (L, size) index matrices for vectorized scratch evaluation
    A_mat: np.ndarray = field(repr=False)
    B_mat: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def L(self) -> int:
        return self.params.L

    def memberA(self, pos0: int) -> np.ndarray:
        """0-based levels i with pos0 in A[i]."""
        indptr, data = self._memberA
        return data[indptr[pos0]:indptr[pos0 + 1]]

    def memberB(self, pos0: int) -> np.ndarray:
        indptr, data = self._memberB
        return data[indptr[pos0]:indptr[pos0 + 1]]

    # -- text dump format -------------------------------------------------
    # line 1: "params n alpha beta epsilon L seed"
    # then per level i (1-based): "A i: <sorted 1-based indices>"
    #                             "B i: <sorted 1-based indices>"

    def dump(self, fh: TextIO) -> None:
        p = self.params
        fh.write(f"params {p.n} {p.alpha!r} {p.beta!r} {p.epsilon!r} {p.L} {p.seed}\n")
        for i in range(p.L):
            fh.write(f"A {i + 1}: " + " ".join(str(j + 1) for j in self.A[i]) + "\n")
            fh.write(f"B {i + 1}: " + " ".join(str(j + 1) for j in self.B[i]) + "\n")

    @classmethod
    def load(cls, fh: TextIO) -> "HotTopicInstance":
        header = fh.readline().split()
        if len(header) != 7 or header[0] != "params":
            raise ValueError("bad instance dump: expected 'params n alpha beta epsilon L seed'")
        n, L, seed = int(header[1]), int(header[5]), int(header[6])
        params = HotTopicParams(n=n, alpha=float(header[2]), beta=float(header[3]),
                                epsilon=float(header[4]), L=L, seed=seed)
        A: list[Optional[np.ndarray]] = [None] * L
        B: list[Optional[np.ndarray]] = [None] * L
        for line in fh:
            if not line.strip():
                continue
            kind, rest = line.split(" ", 1)
            idx_s, vals = rest.split(":")
            i = int(idx_s) - 1
            arr = np.array(sorted(int(v) - 1 for v in vals.split()), dtype=np.int64)
            if kind == "A":
                A[i] = arr
            elif kind == "B":
                B[i] = arr
            else:
                raise ValueError(f"bad instance dump line: {line!r}")
        if any(a is None for a in A) or any(b is None for b in B):
            raise ValueError("instance dump is missing levels")
        return _build_instance(params, A, B)


def _build_instance(params: HotTopicParams,
                    A: list[np.ndarray], B: list[np.ndarray]) -> HotTopicInstance:
    n, L = params.n, params.L
    eps = params.epsilon_exact
    for i in range(L):
        if not set(B[i]).issubset(set(A[i])):
            raise ValueError(f"B_{i + 1} is not a subset of A_{i + 1}")
    tau = np.array([int(eps * len(B[i])) for i in range(L)], dtype=np.int64)
    return HotTopicInstance(
        params=params, A=A, B=B, tau=tau,
        _memberA=_csr_membership(A, n), _memberB=_csr_membership(B, n),
        A_mat=np.vstack(A), B_mat=np.vstack(B),
    )


def generate_instance(params: HotTopicParams,
                      max_cells: int = DEFAULT_MAX_CELLS) -> HotTopicInstance:
    """Draw the sets A_i (uniform floor(alpha*n)-subsets) and B_i subset A_i.

    Each level i uses the sub-seed mix64(seed, i), so any level can be
    regenerated in isolation.
    """
    n, L = params.n, params.L
    sa, sb = params.size_a, params.size_b
    cells = L * sa
    if cells > max_cells:
        raise MemoryError(
            f"instance needs L*floor(alpha*n) = {cells} set entries, "
            f"above the cap of {max_cells}; reduce n or L, or raise max_cells")
    A, B = [], []
    for i in range(1, L + 1):
        gen = np.random.Generator(np.random.PCG64(mix64(params.seed, i)))
        a = np.sort(gen.permutation(n)[:sa]).astype(np.int64)
        b = np.sort(a[gen.permutation(sa)[:sb]])
        A.append(a)
        B.append(b)
    return _build_instance(params, A, B)


def _level_from_zerosB(zerosB: np.ndarray, tau: np.ndarray) -> int:
    """Largest 1-based level l' with zerosB[l'-1] <= tau[l'-1], else 0."""
    ok = zerosB <= tau
    if not ok.any():
        return 0
    return int(len(ok) - np.argmax(ok[::-1]))


def level_of(inst: HotTopicInstance, x) -> int:
    """Level of a BitString (or of a precomputed zerosB array)."""
    if isinstance(x, BitString):
        zerosB = inst.B_mat.shape[1] - x.bits[inst.B_mat].sum(axis=1)
    else:
        zerosB = np.asarray(x)
    return _level_from_zerosB(zerosB, inst.tau)


def _fitness(inst: HotTopicInstance, level: int, onesA: np.ndarray, om: int) -> FitnessValue:
    if level >= inst.L:
        return FitnessValue(level, 0, om)
    hot = int(onesA[level])
    return FitnessValue(level, hot, om - hot)


def evaluate_ht(inst: HotTopicInstance, x: BitString) -> FitnessValue:
    """HotTopic fitness of x as a lexicographic triple."""
    return make_cached(inst, x).fitness


@dataclass
class CachedIndividual:
    """Genome plus incrementally maintained evaluation caches.

    Every cache field equals the value recomputed from scratch from the
    genome; ``aux_level`` is only meaningful in capped-level mode.
    """

    genome: BitString
    onemax: int
    zerosB: np.ndarray
    onesA: np.ndarray
    level: int
    fitness: FitnessValue
    aux_level: Optional[int] = None


def make_cached(inst: HotTopicInstance, x: BitString) -> CachedIndividual:
    """Compute all caches from scratch."""
    if x.n != inst.n:
        raise ValueError(f"genome length {x.n} != instance n {inst.n}")
    bits = x.bits
    onesA = bits[inst.A_mat].sum(axis=1).astype(np.int64)
    zerosB = (inst.B_mat.shape[1] - bits[inst.B_mat].sum(axis=1)).astype(np.int64)
    om = int(bits.sum())
    level = _level_from_zerosB(zerosB, inst.tau)
    return CachedIndividual(genome=x, onemax=om, zerosB=zerosB, onesA=onesA,
                            level=level, fitness=_fitness(inst, level, onesA, om))


def apply_flips(inst: HotTopicInstance, parent: CachedIndividual,
                flips: Sequence[int]) -> CachedIndividual:
    """Child cache after flipping the given 1-based positions.

    Equals ``make_cached(inst, parent.genome.with_flips(flips))`` exactly.
    """
    if len(set(flips)) != len(flips):
        raise ValueError("flip positions must be distinct")
    genome = parent.genome.with_flips(flips)
    onesA = parent.onesA.copy()
    zerosB = parent.zerosB.copy()
    om = parent.onemax
    pbits = parent.genome.bits
    for pos in flips:
        j = pos - 1
        sgn = 1 if pbits[j] == 0 else -1  # becoming a one-bit?
        om += sgn
        la = inst.memberA(j)
        if la.size:
            onesA[la] += sgn
        lb = inst.memberB(j)
        if lb.size:
            zerosB[lb] -= sgn
    level = _level_from_zerosB(zerosB, inst.tau)
    return CachedIndividual(genome=genome, onemax=om, zerosB=zerosB, onesA=onesA,
                            level=level, fitness=_fitness(inst, level, onesA, om))


def evaluate_aux(inst: HotTopicInstance, ell: int, x: CachedIndividual) -> tuple[int, int]:
    """Auxiliary linear fitness at fixed level ell as the pair (hot, rest).

    The hot topic is A_{ell+1}; the lexicographic pair orders points exactly
    like ``n*sum_{A_{ell+1}} x_j + sum_{R_{ell+1}} x_j`` since rest < n.
    """
    if not 0 <= ell <= inst.L - 1:
        raise ValueError(f"ell must lie in 0..{inst.L - 1}")
    hot = int(x.onesA[ell])
    return hot, x.onemax - hot


def capped_level(inst: HotTopicInstance, parent_aux_level: int,
                 y: CachedIndividual) -> int:
    """Level of y when levels may rise by at most one above the parent's.

    Largest l' <= min(parent_aux_level + 1, L) whose B-threshold is met,
    else 0.
    """
    if not 0 <= parent_aux_level <= inst.L:
        raise ValueError(f"parent_aux_level must lie in 0..{inst.L}")
    cap = min(parent_aux_level + 1, inst.L)
    return _level_from_zerosB(y.zerosB[:cap], inst.tau[:cap])


def theorem_regime(mu: int, eta: float, rho: float, n: int,
                   max_cells: int = DEFAULT_MAX_CELLS,
                   alpha: float = 0.25) -> tuple[float, int]:
    """Parameter coupling epsilon = mu^(eta-1), L = floor(exp(rho*eps*n / ln^2 mu)).

    Natural logarithm throughout.  L is clamped to >= 1; a warning is issued
    when the resulting instance would exceed the materialization cap.
    """
    if mu < 2:
        raise ValueError("mu must be >= 2")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if rho <= 0:
        raise ValueError("rho must be positive")
    epsilon = mu ** (-1.0 + eta)
    log_l = rho * epsilon * n / math.log(mu) ** 2
    L = max(1, int(math.exp(log_l))) if log_l < 700 else None
    if L is None or L * int(alpha * n) > max_cells:
        warnings.warn(
            f"theorem regime asks for L = exp({log_l:.3g}) levels, beyond the "
            f"materialization cap of {max_cells} set entries", RuntimeWarning)
        if L is None:
            L = max_cells // max(1, int(alpha * n))
    return epsilon, L
