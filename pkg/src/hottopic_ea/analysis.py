"""Empirical counterparts of the proof objects behind the slowdown argument.

Ranks, Z-series (the OneMax value of the last rank-i individual deleted),
truncated drift, family forests F_i, the selection-free reference growth
process F', the good events E_a..E_e, per-rank lifetimes, and Monte Carlo
estimators for the single-mutation probability bounds.

All logarithms in thresholds are natural.  Probabilistic claims are checked
as frequency statements with explicit Monte Carlo tolerances, never as
per-sample assertions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import BitString, standard_mutation
from .engine import EventLog, RunRecord
from .hottopic import CachedIndividual
from .rng import RngStream


def rank_of(x: BitString, A: Iterable[int]) -> int:
    """Number of one-bits of x inside the 1-based index set A."""
    idx = np.asarray(list(A), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("index set must be non-empty")
    if idx.min() < 1 or idx.max() > x.n:
        raise IndexError(f"positions must lie in 1..{x.n}")
    return int(x.bits[idx - 1].sum())


# ---------------------------------------------------------------------------
# Z-series and truncated drift


@dataclass
class ZSeries:
    """Z_i = OneMax of the last rank-i individual deleted, for completed ranks.

    ``values[i - i_min]`` is Z_i.  Ranks with no deletion inherit the previous
    value (Z_i := Z_{i-1}).  Only ranks strictly below every rank surviving in
    the final population are included, so each reported Z_i is final.
    """

    i_min: int
    values: np.ndarray

    @property
    def i_max(self) -> int:
        return self.i_min + len(self.values) - 1

    def z(self, i: int) -> int:
        if not self.i_min <= i <= self.i_max:
            raise KeyError(f"rank {i} outside defined range {self.i_min}..{self.i_max}")
        return int(self.values[i - self.i_min])

    def __len__(self) -> int:
        return len(self.values)


def extract_z_series(rec: RunRecord) -> ZSeries:
    """Z-series of a rank-logged run.

    Scans death events in chronological order, keeping the last OneMax seen
    per rank, then cuts the series off below the minimum surviving rank.
    """
    ev = rec.events
    if ev is None:
        raise ValueError("run record has no event log")
    last_om: dict[int, int] = {}
    for kind, rank, om in zip(ev.kind, ev.rank, ev.onemax):
        if kind == "death":
            last_om[rank] = om
    if not last_om:
        return ZSeries(i_min=0, values=np.empty(0, dtype=np.int64))
    surviving = rec.final_population_ranks
    cutoff = min(surviving) if surviving else max(last_om) + 1
    complete = [i for i in last_om if i < cutoff]
    if not complete:
        return ZSeries(i_min=0, values=np.empty(0, dtype=np.int64))
    i_min, i_max = min(complete), max(complete)
    values = np.empty(i_max - i_min + 1, dtype=np.int64)
    for i in range(i_min, i_max + 1):
        values[i - i_min] = last_om.get(i, values[i - i_min - 1] if i > i_min else 0)
    return ZSeries(i_min=i_min, values=values)


@dataclass
class DriftEstimate:
    mean: float
    count: int
    stderr: float
    samples: np.ndarray = field(repr=False)


def truncated_drift(z: ZSeries, K: int, mu: int) -> DriftEstimate:
    """Mean of max{Z_{i+K} - Z_i, -ln mu} over all valid window starts i."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if mu < 2:
        raise ValueError("mu must be >= 2 (ln mu would vanish)")
    if len(z) < K + 1:
        raise ValueError(f"series covers {len(z)} ranks, needs at least K+1 = {K + 1}")
    diffs = (z.values[K:] - z.values[:-K]).astype(np.float64)
    samples = np.maximum(diffs, -math.log(mu))
    stderr = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
    return DriftEstimate(mean=float(samples.mean()), count=int(samples.size),
                         stderr=stderr, samples=samples)


# ---------------------------------------------------------------------------
# Family forests


@dataclass
class ForestNode:
    id: int
    parent: Optional[int]       # None for roots
    rank: int
    onemax: int
    depth: int
    birth_round: int
    death_round: Optional[int]


@dataclass
class FamilyForest:
    """Ancestry forest of all individuals of rank >= threshold.

    A node is a root iff its parent's rank is below the threshold (or it has
    no parent); depth counts edges from the root.
    """

    threshold: int
    nodes: dict[int, ForestNode]

    @property
    def roots(self) -> list[int]:
        return [nid for nid, nd in self.nodes.items() if nd.parent is None]

    def root_of(self, nid: int) -> int:
        nd = self.nodes[nid]
        while nd.parent is not None:
            nd = self.nodes[nd.parent]
        return nd.id

    def __len__(self) -> int:
        return len(self.nodes)


def build_family_forest(rec: RunRecord, i: int) -> FamilyForest:
    """Forest over every individual of rank >= i ever evaluated."""
    ev = rec.events
    if ev is None:
        raise ValueError("run record has no event log")
    rank_by_id: dict[int, int] = {}
    nodes: dict[int, ForestNode] = {}
    for k in range(len(ev)):
        if ev.kind[k] == "birth":
            nid, parent, rank = ev.id[k], ev.parent[k], ev.rank[k]
            rank_by_id[nid] = rank
            if rank < i:
                continue
            is_root = parent < 0 or rank_by_id[parent] < i
            if is_root:
                depth = 0
                par = None
            else:
                par = parent
                depth = nodes[parent].depth + 1
            nodes[nid] = ForestNode(id=nid, parent=par, rank=rank, onemax=ev.onemax[k],
                                    depth=depth, birth_round=ev.round[k], death_round=None)
        else:
            nid = ev.id[k]
            if nid in nodes:
                nodes[nid].death_round = ev.round[k]
    return FamilyForest(threshold=i, nodes=nodes)


def simulate_reference_forest(mu: int, T: int, rng: RngStream) -> FamilyForest:
    """Materialized reference process F'.

    Round 0 has a single root; in each later round every existing vertex
    independently spawns one child with probability 1/mu, then one new root
    is added.  Rank and onemax are not meaningful here and are set to -1.
    """
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if T < 0:
        raise ValueError("T must be >= 0")
    nodes: dict[int, ForestNode] = {}
    nodes[0] = ForestNode(0, None, -1, -1, 0, 0, None)
    next_id = 1
    for t in range(1, T + 1):
        existing = len(nodes)
        spawns = np.flatnonzero(rng.gen.random(existing) < 1.0 / mu)
        for parent in spawns:
            nodes[next_id] = ForestNode(next_id, int(parent), -1, -1,
                                        nodes[int(parent)].depth + 1, t, None)
            next_id += 1
        nodes[next_id] = ForestNode(next_id, None, -1, -1, 0, t, None)
        next_id += 1
    return FamilyForest(threshold=0, nodes=nodes)


def depth_profile(forest: FamilyForest) -> np.ndarray:
    """Number of nodes per depth, as an array indexed by depth."""
    if not forest.nodes:
        return np.empty(0, dtype=np.int64)
    depths = np.array([nd.depth for nd in forest.nodes.values()], dtype=np.int64)
    return np.bincount(depths)


def simulate_depth_counts(mu: int, T: int, reps: int, dmax: int,
                          rng: RngStream, single_tree: bool = False) -> np.ndarray:
    """Per-depth vertex counts of F' after T rounds, without materialization.

    Returns an int64 array of shape (reps, dmax+1); entry [r, d] is the number
    of depth-d vertices in repetition r.  Child counts are advanced by the
    binomial recursion births_d ~ Binomial(count_{d-1}, 1/mu), which has
    exactly the distribution of per-vertex independent spawning.  With
    ``single_tree`` no new roots are added (one tree grown from one root).
    """
    if dmax < 0 or T < 0 or reps < 1 or mu < 1:
        raise ValueError("need mu, reps >= 1 and T, dmax >= 0")
    counts = np.zeros((reps, dmax + 1), dtype=np.int64)
    counts[:, 0] = 1
    p = 1.0 / mu
    for _ in range(T):
        births = rng.gen.binomial(counts[:, :dmax], p)
        counts[:, 1:] += births
        if not single_tree:
            counts[:, 0] += 1
    return counts


def couple_forests(rec: RunRecord, i: int, rng: RngStream,
                   horizon: Optional[int] = None,
                   max_nodes: int = 2_000_000):
    """Coupled construction embedding the rank-i family forest into F'.

    Replays the run's event log: whenever the run creates a rank >= i
    individual, the corresponding spawn or root addition in F' is the image
    of that individual; all other F' growth (spawns of unmapped or dead
    vertices, root slots in rounds without a real root) is filled with dummy
    vertices drawn independently with probability 1/mu.  One root is added
    every round, so F' keeps its root-per-round shape while containing F_i
    as a subgraph by construction.

    Returns (forest, fprime, mapping) where mapping sends every F_i node id
    to its F' node id.  Requires that no round-0 individual has rank >= i
    (the coupling clock starts at the first rank-i creation).

    F' grows like e^(T/mu), so ``horizon`` caps the number of coupled rounds
    after the first rank-i creation; the returned forest is restricted to
    births inside that window.  ``max_nodes`` aborts a runaway simulation.
    """
    ev = rec.events
    if ev is None:
        raise ValueError("run record has no event log")
    forest = build_family_forest(rec, i)
    births_by_round: dict[int, tuple[int, int, int]] = {}
    deaths_by_round: dict[int, int] = {}
    rank_by_id: dict[int, int] = {}
    t_first = None
    for k in range(len(ev)):
        nid, rank, rnd = ev.id[k], ev.rank[k], ev.round[k]
        if ev.kind[k] == "birth":
            rank_by_id[nid] = rank
            if rnd == 0:
                if rank >= i:
                    raise ValueError("coupling requires no initial individual of rank >= i")
                continue
            births_by_round[rnd] = (nid, ev.parent[k], rank)
            if rank >= i and t_first is None:
                t_first = rnd
        else:
            deaths_by_round[rnd] = nid
    fprime: dict[int, ForestNode] = {}
    mapping: dict[int, int] = {}
    if t_first is None:
        return forest, FamilyForest(threshold=0, nodes=fprime), mapping

    mu = rec.config.mu
    next_fp = 0
    real_of_fp: dict[int, int] = {}    # F' id -> mapped real id
    alive: set[int] = set()            # mapped real ids still in the population

    def add_fp(parent: Optional[int], t: int, real_id: Optional[int]) -> int:
        nonlocal next_fp
        fp = next_fp
        next_fp += 1
        depth = 0 if parent is None else fprime[parent].depth + 1
        fprime[fp] = ForestNode(fp, parent, -1, -1, depth, t, None)
        if real_id is not None:
            mapping[real_id] = fp
            real_of_fp[fp] = real_id
            alive.add(real_id)
        return fp

    T_last = max(births_by_round)
    if horizon is not None:
        T_last = min(T_last, t_first + horizon)
        forest = FamilyForest(
            threshold=i,
            nodes={nid: nd for nid, nd in forest.nodes.items()
                   if nd.birth_round <= T_last})
    for t in range(t_first, T_last + 1):
        if len(fprime) > max_nodes:
            raise MemoryError(
                f"reference process exceeded {max_nodes} nodes after "
                f"{t - t_first} rounds; reduce the horizon or raise mu")
        fp_t = t - t_first  # F' clock: round 0 holds only the initial root
        birth = births_by_round.get(t)
        child_id = parent_id = child_rank = None
        if birth is not None:
            child_id, parent_id, child_rank = birth
        if fp_t > 0:
            # spawn phase: the real offspring's mapped parent spawns its image;
            # dummy and dead vertices spawn dummies independently; other mapped
            # live vertices were not chosen as parent, so they do not spawn.
            coupled_parent = mapping.get(parent_id) if parent_id is not None else None
            for v in list(fprime.keys()):
                if v == coupled_parent:
                    add_fp(v, fp_t, child_id if child_rank >= i else None)
                elif v not in real_of_fp or real_of_fp[v] not in alive:
                    if rng.gen.random() < 1.0 / mu:
                        add_fp(v, fp_t, None)
        # root phase: exactly one root per F' round, real if the run created one
        real_root = None
        if child_id is not None and child_rank >= i and child_id not in mapping:
            parent_rank = rank_by_id.get(parent_id, -1)
            if parent_rank < i:
                real_root = child_id
        add_fp(None, fp_t, real_root)
        dead = deaths_by_round.get(t)
        if dead is not None:
            alive.discard(dead)
    return forest, FamilyForest(threshold=0, nodes=fprime), mapping


# ---------------------------------------------------------------------------
# Lifetimes


def measure_lifetimes(rec: RunRecord) -> dict[int, tuple[int, int]]:
    """Per-rank (t_i, T_i): first birth round with rank >= i, last death round
    with rank <= i.  Only ranks where both are observed are reported."""
    ev = rec.events
    if ev is None:
        raise ValueError("run record has no event log")
    birth_rounds: dict[int, int] = {}
    death_rounds: dict[int, int] = {}
    for k in range(len(ev)):
        rank, rnd = ev.rank[k], ev.round[k]
        if ev.kind[k] == "birth":
            if rank not in birth_rounds or rnd < birth_rounds[rank]:
                birth_rounds[rank] = rnd
        else:
            if rank not in death_rounds or rnd > death_rounds[rank]:
                death_rounds[rank] = rnd
    if not birth_rounds or not death_rounds:
        return {}
    ranks = range(min(min(birth_rounds), min(death_rounds)),
                  max(max(birth_rounds), max(death_rounds)) + 1)
    out: dict[int, tuple[int, int]] = {}
    for i in ranks:
        t_i = min((r for j, r in birth_rounds.items() if j >= i), default=None)
        T_i = max((r for j, r in death_rounds.items() if j <= i), default=None)
        if t_i is not None and T_i is not None:
            out[i] = (t_i, T_i)
    return out


# ---------------------------------------------------------------------------
# Good events


@dataclass(frozen=True)
class GoodEventParams:
    """Thresholds for the typical-run events E_a..E_e.

    Defaults follow the constants used in the slowdown argument:
    c_d = c*phi/16 and c_e = 2e^2*c*k with k just above 9e^(alpha*c) /
    (2e^2*c*ln 2); K = ceil(2(c_e+1)/c_d).  The feasibility window for eta is
    eta < min{g(phi), 1/2 - g(phi), c*phi/128, c_d/6} with
    g(phi) = phi*(ln(8e^(alpha*c+1)) - ln(phi)).
    """

    c: float
    alpha: float
    phi: float = 0.5
    eta: float = 0.05
    c_d: Optional[float] = None
    c_e: Optional[float] = None
    k: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.phi < 1:
            raise ValueError("phi must lie in (0, 1)")
        if self.c <= 0 or not 0 < self.alpha < 1:
            raise ValueError("need c > 0 and 0 < alpha < 1")
        if self.c_d is None:
            object.__setattr__(self, "c_d", self.c * self.phi / 16)
        if self.k is None:
            object.__setattr__(
                self, "k",
                1.001 * 9 * math.exp(self.alpha * self.c) / (2 * math.e ** 2 * self.c * math.log(2)))
        if self.c_e is None:
            object.__setattr__(self, "c_e", 2 * math.e ** 2 * self.c * self.k)
        if self.c_d <= 0 or self.c_e <= 0:
            raise ValueError("c_d and c_e must be positive")

    @property
    def K(self) -> int:
        return math.ceil(2 * (self.c_e + 1) / self.c_d)

    @property
    def g_phi(self) -> float:
        return self.phi * (math.log(8 * math.exp(self.alpha * self.c + 1)) - math.log(self.phi))

    @property
    def eta_bound(self) -> float:
        g = self.g_phi
        return min(g, 0.5 - g, self.c * self.phi / 128, self.c_d / 6)

    @property
    def eta_feasible(self) -> bool:
        return self.eta < self.eta_bound


@dataclass
class GoodEventReport:
    """Per-event verdicts for one rank threshold i.

    ``e_d`` is None when flip counts are missing from the log.
    """

    i: int
    e_a: bool
    e_b: bool
    e_c: bool
    e_d: Optional[bool]
    e_e: bool
    root_count: int
    detail: list = field(default_factory=list)

    @property
    def all_good(self) -> bool:
        return bool(self.e_a and self.e_b and self.e_c and (self.e_d is not False) and self.e_e)


def check_good_events(rec: RunRecord, forest: FamilyForest, params: GoodEventParams,
                      i: int, mu: int, n: int, epsilon: float) -> GoodEventReport:
    """Evaluate E_a..E_e from a run's event log and its rank-i family forest.

    E_a: no rank <= i-1 vertex creates rank >= i+1 offspring.
    E_b: at most eps*mu*ln^3(mu) roots in F_i.
    E_c: no rank-i vertex of depth <= phi*ln(mu) creates rank > i offspring.
    E_d: every rank-i vertex x that creates rank >= i+1 offspring satisfies
         Om(x) <= Om(root) - c_d*ln(mu) when Om(root) >= (1-8*eps)*n, and
         Om(x) <= (1-4*eps)*n otherwise; the improving mutation flips at most
         (c_d/2)*ln(mu) bits.
    E_e: no rank-i vertex exceeds its root's OneMax by more than c_e*ln(mu).
    """
    ev = rec.events
    if ev is None:
        raise ValueError("run record has no event log")
    if forest.threshold != i:
        raise ValueError(f"forest threshold {forest.threshold} != i = {i}")
    ln_mu = math.log(mu)
    detail: list[str] = []

    rank_by_id: dict[int, int] = {}
    e_a = True
    improving: list[tuple[int, int]] = []  # (parent id, |flips|) for rank-i -> >= i+1 births
    spawn_up: set[int] = set()             # rank-i ids creating rank > i offspring
    have_flips = True
    for k in range(len(ev)):
        if ev.kind[k] != "birth":
            continue
        nid, parent, rank = ev.id[k], ev.parent[k], ev.rank[k]
        rank_by_id[nid] = rank
        if parent < 0:
            continue
        prank = rank_by_id[parent]
        if prank <= i - 1 and rank >= i + 1:
            e_a = False
            detail.append(f"E_a: vertex {parent} (rank {prank}) created {nid} (rank {rank})")
        if prank == i and rank > i:
            spawn_up.add(parent)
            flips = ev.flips[k]
            if flips is None:
                have_flips = False
            improving.append((parent, flips))

    root_count = len(forest.roots)
    e_b = root_count <= epsilon * mu * ln_mu ** 3
    if not e_b:
        detail.append(f"E_b: {root_count} roots > eps*mu*ln^3(mu) = {epsilon * mu * ln_mu ** 3:.1f}")

    e_c = True
    for nid in spawn_up:
        nd = forest.nodes.get(nid)
        if nd is not None and nd.rank == i and nd.depth <= params.phi * ln_mu:
            e_c = False
            detail.append(f"E_c: rank-{i} vertex {nid} at depth {nd.depth} spawned upward")

    e_d: Optional[bool] = True
    for nid, flips in improving:
        nd = forest.nodes.get(nid)
        if nd is None or nd.rank != i:
            continue
        root_om = forest.nodes[forest.root_of(nid)].onemax
        if root_om >= (1 - 8 * epsilon) * n:
            if nd.onemax > root_om - params.c_d * ln_mu:
                e_d = False
                detail.append(f"E_d: vertex {nid} Om {nd.onemax} too close to root Om {root_om}")
        elif nd.onemax > (1 - 4 * epsilon) * n:
            e_d = False
            detail.append(f"E_d: vertex {nid} Om {nd.onemax} > (1-4eps)n with low root")
        if flips is not None and flips > params.c_d / 2 * ln_mu:
            e_d = False
            detail.append(f"E_d: improving mutation flipped {flips} bits")
    if not have_flips:
        e_d = None
        detail.append("E_d: flip counts missing, verdict unknown")

    e_e = True
    for nid, nd in forest.nodes.items():
        if nd.rank != i:
            continue
        root_om = forest.nodes[forest.root_of(nid)].onemax
        if nd.onemax > root_om + params.c_e * ln_mu:
            e_e = False
            detail.append(f"E_e: vertex {nid} Om {nd.onemax} exceeds root Om {root_om}")

    return GoodEventReport(i=i, e_a=e_a, e_b=e_b, e_c=e_c, e_d=e_d, e_e=e_e,
                           root_count=root_count, detail=detail)


# ---------------------------------------------------------------------------
# Single-mutation probability estimators


@dataclass
class LocalProbEstimates:
    """Monte Carlo estimates against the analytic single-step bounds.

    p_hat_r estimates Pr[ones on A not decreased]; analytic lower bound
    p_r_bound = e^(-alpha*c)/2.  p_hat_i estimates Pr[strictly increased];
    bracketing bounds p_l = eps_x*alpha*c*e^(-alpha*c)/2 and
    p_u = eps_x*alpha*c, with eps_x the zero-density of x on A.
    ratio_hat estimates Pr[gain >= 2] / Pr[gain >= 1], bounded by
    2*eps_x*alpha*c.
    """

    samples: int
    eps_x: float
    p_hat_r: float
    p_hat_i: float
    ratio_hat: float
    p_r_bound: float
    p_l_bound: float
    p_u_bound: float
    ratio_bound: float

    def sigma(self, p: float) -> float:
        """Monte Carlo standard deviation of a frequency estimate near p."""
        return math.sqrt(max(p * (1 - p), 1e-12) / self.samples)


def estimate_local_probs(x: CachedIndividual | BitString, A: Sequence[int],
                         c: float, samples: int, rng: RngStream,
                         alpha: Optional[float] = None) -> LocalProbEstimates:
    """Estimate the one-step rank change probabilities under standard mutation.

    ``A`` is the 1-based hot topic index set; ``alpha`` defaults to |A|/n.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    genome = x.genome if isinstance(x, CachedIndividual) else x
    n = genome.n
    idx = np.asarray(list(A), dtype=np.int64) - 1
    if idx.size == 0:
        raise ValueError("index set must be non-empty")
    a = idx.size / n if alpha is None else alpha
    ones0 = int(genome.bits[idx].sum())
    eps_x = (idx.size - ones0) / idx.size

    not_dec = 0
    inc = 0
    inc2 = 0
    bits_a = genome.bits[idx]
    p = c / n
    gen = rng.gen
    in_a = np.zeros(n, dtype=bool)
    in_a[idx] = True
    for _ in range(samples):
        k = int(gen.binomial(n, p))
        if k == 0:
            not_dec += 1
            continue
        if 4 * k * k <= n:
            while True:
                pos = gen.integers(0, n, size=k)
                if k == 1 or np.unique(pos).size == k:
                    break
        else:
            pos = gen.permutation(n)[:k]
        hit = pos[in_a[pos]]
        if hit.size == 0:
            not_dec += 1
            continue
        vals = genome.bits[hit]
        gain = int((vals == 0).sum()) - int((vals == 1).sum())
        if gain >= 0:
            not_dec += 1
        if gain >= 1:
            inc += 1
        if gain >= 2:
            inc2 += 1

    return LocalProbEstimates(
        samples=samples, eps_x=eps_x,
        p_hat_r=not_dec / samples,
        p_hat_i=inc / samples,
        ratio_hat=inc2 / inc if inc else 0.0,
        p_r_bound=math.exp(-a * c) / 2,
        p_l_bound=eps_x * a * c * math.exp(-a * c) / 2,
        p_u_bound=eps_x * a * c,
        ratio_bound=2 * eps_x * a * c,
    )
