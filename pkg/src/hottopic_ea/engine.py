"""The (mu+1)-EA main loop over pluggable fitness modes.

Each round: pick a parent uniformly at random, apply standard bit mutation,
add the offspring, then remove one minimum-fitness member with uniform random
tie-breaking.  Runtime is counted in function evaluations; the mu initial
evaluations are included.

Modes:

``hottopic``
    The full level-based fitness (lexicographic triple).
``aux_linear``
    The linear fitness at a fixed level ell: pair (ones on the hot topic
    A_{ell+1}, ones elsewhere).
``capped_level``
    Like hottopic, but an offspring's level may exceed its parent's recorded
    level by at most one; the recorded level is lineage state.
``onemax``
    Plain ones-counting; needs no instance.

The hot loop keeps the population in preallocated numpy arrays and compares
fitness through a single int64 key that is order-isomorphic to the
lexicographic triple.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import BitString
from .hottopic import FitnessValue, HotTopicInstance
from .rng import RngStream

MODES = ("hottopic", "aux_linear", "capped_level", "onemax")


@dataclass(frozen=True)
class EAConfig:
    """Run configuration for the (mu+1)-EA."""

    mu: int
    c: float
    mode: str = "hottopic"
    n: Optional[int] = None            # required for onemax mode
    aux_level: int = 0                 # fixed ell for aux_linear (0-based)
    max_evaluations: int = 10_000_000
    stop_at_optimum: bool = True
    master_seed: int = 0
    stream_id: int = 0
    log_events: bool = False
    init_ones_prob: float = 0.5        # biased initialization for targeted studies
    trace_stride: int = 0              # 0 disables best-individual tracing

    def __post_init__(self):
        if self.mu < 1:
            raise ValueError("mu must be >= 1")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.max_evaluations < self.mu:
            raise ValueError("budget must be >= mu (initialization counts)")
        if not 0 <= self.init_ones_prob <= 1:
            raise ValueError("init_ones_prob must lie in [0, 1]")


@dataclass
class EventLog:
    """Birth/death event log in column arrays.

    Every individual ever evaluated gets one birth event; each completed
    round also records exactly one death.  Initial population members are
    births at round 0 with parent -1.
    """

    round: list = field(default_factory=list)
    kind: list = field(default_factory=list)      # "birth" | "death"
    id: list = field(default_factory=list)
    parent: list = field(default_factory=list)    # -1 for initial members
    rank: list = field(default_factory=list)      # ones on the designated hot topic
    onemax: list = field(default_factory=list)
    level: list = field(default_factory=list)
    hot: list = field(default_factory=list)
    rest: list = field(default_factory=list)
    flips: list = field(default_factory=list)     # |flips| at birth, 0 at death

    def append(self, round_, kind, id_, parent, rank, onemax, level, hot, rest, flips):
        self.round.append(round_)
        self.kind.append(kind)
        self.id.append(id_)
        self.parent.append(parent)
        self.rank.append(rank)
        self.onemax.append(onemax)
        self.level.append(level)
        self.hot.append(hot)
        self.rest.append(rest)
        self.flips.append(flips)

    def __len__(self) -> int:
        return len(self.round)


@dataclass
class TracePoint:
    """Strided snapshot of the population's best individual."""

    round: int
    evaluations: int
    best_onemax: int
    best_level: int
    best_hot: int
    best_rest: int


@dataclass
class RunRecord:
    """Outcome of one (mu+1)-EA run."""

    config: EAConfig
    evaluations: int
    rounds: int
    optimum_evaluation: Optional[int]   # evaluation index of first optimum, or None
    censored: bool
    visited_levels: set
    final_best: FitnessValue
    final_best_onemax: int
    events: Optional[EventLog] = None
    trace: list = field(default_factory=list)
    final_population_ranks: list = field(default_factory=list)
    final_population_onemax: list = field(default_factory=list)


class _State:
    """Preallocated population storage for one run.

    mu+1 slots; ``free`` is the slot that will hold the next offspring.
    ``key`` is level*(n+1)^2 + hot*(n+1) + rest, which orders exactly like
    the lexicographic triple since hot, rest <= n.
    """

    def __init__(self, mu: int, n: int, L: int):
        self.genomes = np.zeros((mu + 1, n), dtype=np.uint8)
        self.onemax = np.zeros(mu + 1, dtype=np.int64)
        self.onesA = np.zeros((mu + 1, L), dtype=np.int64)
        self.zerosB = np.zeros((mu + 1, L), dtype=np.int64)
        self.level = np.zeros(mu + 1, dtype=np.int64)
        self.aux_level = np.zeros(mu + 1, dtype=np.int64)
        self.key = np.zeros(mu + 1, dtype=np.int64)
        self.ids = np.zeros(mu + 1, dtype=np.int64)
        self.slots = np.arange(mu, dtype=np.int64)  # occupied slots
        self.free = mu


def _fitness_of_slot(st: _State, slot: int, n: int, L: int,
                     mode: str, aux_level: int) -> FitnessValue:
    om = int(st.onemax[slot])
    if mode == "onemax":
        return FitnessValue(0, 0, om)
    if mode == "aux_linear":
        hot = int(st.onesA[slot, aux_level])
        return FitnessValue(0, hot, om - hot)
    lev = int(st.aux_level[slot] if mode == "capped_level" else st.level[slot])
    if lev >= L:
        return FitnessValue(lev, 0, om)
    hot = int(st.onesA[slot, lev])
    return FitnessValue(lev, hot, om - hot)


def select_survivor(keys: np.ndarray, rng: RngStream) -> int:
    """Index of the member to remove: uniform among the minimum-fitness ones."""
    if keys.size < 2:
        raise ValueError("selection pool needs at least 2 members")
    lows = np.flatnonzero(keys == keys.min())
    if lows.size == 1:
        return int(lows[0])
    return int(lows[rng.gen.integers(0, lows.size)])


def run_ea(cfg: EAConfig,
           inst: Optional[HotTopicInstance] = None,
           hooks: Optional[dict[str, Callable]] = None) -> RunRecord:
    """Run the (mu+1)-EA until the optimum is evaluated or the budget ends.

    ``hooks`` may provide ``on_birth(round, id, parent, onemax, flips)`` and
    ``on_death(round, id, onemax)`` callables.
    """
    if cfg.mode == "onemax":
        if inst is not None:
            raise ValueError("onemax mode takes no instance")
        if cfg.n is None or cfg.n < 1:
            raise ValueError("onemax mode needs n >= 1")
        n, L = cfg.n, 0
        tau = np.empty(0, dtype=np.int64)
    else:
        if inst is None:
            raise ValueError(f"{cfg.mode} mode needs a HotTopicInstance")
        if cfg.n is not None and cfg.n != inst.n:
            raise ValueError("cfg.n disagrees with the instance")
        n, L = inst.n, inst.L
        tau = inst.tau
        if cfg.mode == "aux_linear" and not 0 <= cfg.aux_level <= L - 1:
            raise ValueError(f"aux_level must lie in 0..{L - 1}")

    if cfg.c > n:
        raise ValueError(f"mutation parameter c={cfg.c} exceeds n={n}")
    rng = RngStream(cfg.master_seed, cfg.stream_id)
    gen = rng.gen
    mu, c = cfg.mu, cfg.c
    st = _State(mu, n, max(L, 1))
    events = EventLog() if cfg.log_events else None
    hooks = hooks or {}
    on_birth = hooks.get("on_birth")
    on_death = hooks.get("on_death")

    aux = cfg.aux_level
    rank_level = aux if cfg.mode == "aux_linear" else None

    def slot_rank(slot: int) -> int:
        if rank_level is None:
            return -1
        return int(st.onesA[slot, rank_level])

    def slot_key(slot: int) -> int:
        fv = _fitness_of_slot(st, slot, n, L, cfg.mode, aux)
        return (fv.level * (n + 1) + fv.hot) * (n + 1) + fv.rest

    def level_from_zeros(zb: np.ndarray, cap: int) -> int:
        ok = zb[:cap] <= tau[:cap]
        if not ok.any():
            return 0
        return int(cap - np.argmax(ok[::-1]))

    # -- initialization (mu evaluations) ----------------------------------
    evaluations = 0
    optimum_evaluation = None
    visited_levels: set[int] = set()
    next_id = 0
    for slot in range(mu):
        if cfg.init_ones_prob == 0.5:
            bits = gen.integers(0, 2, size=n, dtype=np.uint8)
        else:
            bits = (gen.random(n) < cfg.init_ones_prob).astype(np.uint8)
        st.genomes[slot] = bits
        st.onemax[slot] = om = int(bits.sum())
        if L:
            st.onesA[slot] = bits[inst.A_mat].sum(axis=1)
            st.zerosB[slot] = inst.B_mat.shape[1] - bits[inst.B_mat].sum(axis=1)
            lev = level_from_zeros(st.zerosB[slot], L)
            st.level[slot] = lev
            st.aux_level[slot] = min(lev, 1) if cfg.mode == "capped_level" else lev
        st.key[slot] = slot_key(slot)
        st.ids[slot] = next_id
        evaluations += 1
        if om == n and optimum_evaluation is None:
            optimum_evaluation = evaluations
        if events is not None or on_birth is not None:
            fv = _fitness_of_slot(st, slot, n, L, cfg.mode, aux)
            if events is not None:
                events.append(0, "birth", next_id, -1, slot_rank(slot),
                              om, fv.level, fv.hot, fv.rest, 0)
            if on_birth is not None:
                on_birth(0, next_id, -1, om, 0)
        next_id += 1

    best_slot = int(st.slots[np.argmax(st.key[st.slots])])
    visited_levels.add(int(st.level[best_slot]))

    def record_trace(round_, trace):
        bs = int(st.slots[np.argmax(st.key[st.slots])])
        fv = _fitness_of_slot(st, bs, n, L, cfg.mode, aux)
        trace.append(TracePoint(round_, evaluations, int(st.onemax[bs]),
                                fv.level, fv.hot, fv.rest))

    trace: list[TracePoint] = []
    if cfg.trace_stride:
        record_trace(0, trace)

    # -- main loop --------------------------------------------------------
    round_ = 0
    done = cfg.stop_at_optimum and optimum_evaluation is not None
    while not done and evaluations < cfg.max_evaluations:
        round_ += 1
        parent_slot = int(st.slots[gen.integers(0, mu)])

        # standard bit mutation: k ~ Binomial(n, c/n), then uniform k-subset
        k = int(gen.binomial(n, c / n))
        child = st.free
        st.genomes[child] = st.genomes[parent_slot]
        st.onemax[child] = st.onemax[parent_slot]
        if L:
            st.onesA[child] = st.onesA[parent_slot]
            st.zerosB[child] = st.zerosB[parent_slot]
        if k:
            if 4 * k * k <= n:
                while True:
                    pos = gen.integers(0, n, size=k)
                    if k == 1 or np.unique(pos).size == k:
                        break
            else:
                pos = gen.permutation(n)[:k]
            row = st.genomes[child]
            sgn = np.where(row[pos] == 0, 1, -1).astype(np.int64)
            row[pos] ^= 1
            st.onemax[child] += int(sgn.sum())
            if L:
                for j, s in zip(pos, sgn):
                    la = inst.memberA(int(j))
                    if la.size:
                        st.onesA[child, la] += s
                    lb = inst.memberB(int(j))
                    if lb.size:
                        st.zerosB[child, lb] -= s
        if L:
            lev = level_from_zeros(st.zerosB[child], L)
            st.level[child] = lev
            if cfg.mode == "capped_level":
                cap = min(int(st.aux_level[parent_slot]) + 1, L)
                st.aux_level[child] = level_from_zeros(st.zerosB[child], cap)
            else:
                st.aux_level[child] = lev
        st.key[child] = slot_key(child)
        st.ids[child] = next_id
        evaluations += 1
        om = int(st.onemax[child])
        if om == n and optimum_evaluation is None:
            optimum_evaluation = evaluations
        if events is not None or on_birth is not None:
            fv = _fitness_of_slot(st, child, n, L, cfg.mode, aux)
            if events is not None:
                events.append(round_, "birth", next_id, int(st.ids[parent_slot]),
                              slot_rank(child), om, fv.level, fv.hot, fv.rest, int(k))
            if on_birth is not None:
                on_birth(round_, next_id, int(st.ids[parent_slot]), om, int(k))
        next_id += 1

        # survivor selection over the mu+1 pool
        pool = np.append(st.slots, child)
        loser_pos = select_survivor(st.key[pool], rng)
        loser = int(pool[loser_pos])
        if events is not None or on_death is not None:
            if events is not None:
                fv = _fitness_of_slot(st, loser, n, L, cfg.mode, aux)
                events.append(round_, "death", int(st.ids[loser]), -1,
                              slot_rank(loser), int(st.onemax[loser]),
                              fv.level, fv.hot, fv.rest, 0)
            if on_death is not None:
                on_death(round_, int(st.ids[loser]), int(st.onemax[loser]))
        if loser != child:
            st.slots[loser_pos] = child
        st.free = loser

        best_slot = int(st.slots[np.argmax(st.key[st.slots])])
        visited_levels.add(int(st.level[best_slot]))
        if cfg.trace_stride and round_ % cfg.trace_stride == 0:
            record_trace(round_, trace)
        done = cfg.stop_at_optimum and optimum_evaluation is not None

    if cfg.trace_stride and (not trace or trace[-1].round != round_):
        record_trace(round_, trace)

    best_fv = _fitness_of_slot(st, best_slot, n, L, cfg.mode, aux)
    return RunRecord(
        config=cfg,
        evaluations=evaluations,
        rounds=round_,
        optimum_evaluation=optimum_evaluation,
        censored=optimum_evaluation is None,
        visited_levels=visited_levels,
        final_best=best_fv,
        final_best_onemax=int(st.onemax[best_slot]),
        events=events,
        trace=trace,
        final_population_ranks=[slot_rank(int(s)) for s in st.slots],
        final_population_onemax=[int(st.onemax[int(s)]) for s in st.slots],
    )
