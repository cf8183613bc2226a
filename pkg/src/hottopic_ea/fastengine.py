"""JIT-compiled hot loop for large sweep runs.

Functionally equivalent to :func:`hottopic_ea.engine.run_ea` (same algorithm,
same fitness order, same uniform tie-breaking) but without event logging, and
roughly two orders of magnitude faster.  It draws its randomness from the
compiled runtime's Mersenne Twister seeded from the run's mix64 sub-seed, so
runs are deterministic per (master_seed, stream_id) but follow a different
random sequence than the reference engine.  Sweep-level statistics are
distribution-equal; tests comparing the two engines do so statistically.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .engine import EAConfig, RunRecord, TracePoint
from .hottopic import FitnessValue, HotTopicInstance
from .rng import mix64

_MODE_CODE = {"hottopic": 0, "aux_linear": 1, "onemax": 2}


@njit(cache=True)
def _run_loop(A_mat, B_mat, tau, mA_indptr, mA_data, mB_indptr, mB_data,
              mu, c, n, L, mode, aux_ell, max_evals, seed,
              stop_at_optimum, init_ones_prob, trace_stride, trace_buf):
    np.random.seed(seed)
    genomes = np.zeros((mu + 1, n), dtype=np.uint8)
    onesA = np.zeros((mu + 1, max(L, 1)), dtype=np.int64)
    zerosB = np.zeros((mu + 1, max(L, 1)), dtype=np.int64)
    onemax = np.zeros(mu + 1, dtype=np.int64)
    level = np.zeros(mu + 1, dtype=np.int64)
    key = np.zeros(mu + 1, dtype=np.int64)
    slots = np.arange(mu)
    visited = np.zeros(L + 1, dtype=np.uint8)
    sb = B_mat.shape[1]
    base = n + 1

    evaluations = 0
    optimum_eval = np.int64(-1)

    for slot in range(mu):
        om = 0
        for j in range(n):
            b = np.uint8(1) if np.random.random() < init_ones_prob else np.uint8(0)
            genomes[slot, j] = b
            om += b
        onemax[slot] = om
        lev = 0
        for i in range(L):
            s = 0
            for t in range(A_mat.shape[1]):
                s += genomes[slot, A_mat[i, t]]
            onesA[slot, i] = s
            z = 0
            for t in range(sb):
                z += 1 - genomes[slot, B_mat[i, t]]
            zerosB[slot, i] = z
        for i in range(L - 1, -1, -1):
            if zerosB[slot, i] <= tau[i]:
                lev = i + 1
                break
        level[slot] = lev
        if mode == 0:
            hot = onesA[slot, lev] if lev < L else 0
            key[slot] = (lev * base + hot) * base + (om - hot)
        elif mode == 1:
            key[slot] = onesA[slot, aux_ell] * base + (om - onesA[slot, aux_ell])
        else:
            key[slot] = om
        evaluations += 1
        if om == n and optimum_eval < 0:
            optimum_eval = evaluations

    # best tracking and trace
    trace_count = 0

    def best_of():
        bs = slots[0]
        for t in range(1, mu):
            if key[slots[t]] > key[bs]:
                bs = slots[t]
        return bs

    def hot_of(bs):
        if mode == 1:
            return onesA[bs, aux_ell]
        if mode == 0 and level[bs] < L:
            return onesA[bs, level[bs]]
        return np.int64(0)

    bs = best_of()
    visited[level[bs]] = 1
    if trace_stride > 0:
        trace_buf[0, 0] = 0
        trace_buf[0, 1] = evaluations
        trace_buf[0, 2] = onemax[bs]
        trace_buf[0, 3] = level[bs]
        trace_buf[0, 4] = hot_of(bs)
        trace_count = 1

    free = mu
    round_ = 0
    p = c / n
    done = stop_at_optimum and optimum_eval > 0
    pos = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=np.uint8)

    while not done and evaluations < max_evals:
        round_ += 1
        parent = slots[np.random.randint(0, mu)]
        child = free
        genomes[child, :] = genomes[parent, :]
        om = onemax[parent]
        for i in range(L):
            onesA[child, i] = onesA[parent, i]
            zerosB[child, i] = zerosB[parent, i]
        k = np.random.binomial(n, p)
        if k > 0:
            # sample k distinct positions by rejection
            cnt = 0
            while cnt < k:
                j = np.random.randint(0, n)
                if seen[j] == 0:
                    seen[j] = 1
                    pos[cnt] = j
                    cnt += 1
            for t in range(k):
                seen[pos[t]] = 0
            for t in range(k):
                j = pos[t]
                if genomes[child, j] == 0:
                    genomes[child, j] = 1
                    om += 1
                    for q in range(mA_indptr[j], mA_indptr[j + 1]):
                        onesA[child, mA_data[q]] += 1
                    for q in range(mB_indptr[j], mB_indptr[j + 1]):
                        zerosB[child, mB_data[q]] -= 1
                else:
                    genomes[child, j] = 0
                    om -= 1
                    for q in range(mA_indptr[j], mA_indptr[j + 1]):
                        onesA[child, mA_data[q]] -= 1
                    for q in range(mB_indptr[j], mB_indptr[j + 1]):
                        zerosB[child, mB_data[q]] += 1
        onemax[child] = om
        lev = 0
        for i in range(L - 1, -1, -1):
            if zerosB[child, i] <= tau[i]:
                lev = i + 1
                break
        level[child] = lev
        if mode == 0:
            hot = onesA[child, lev] if lev < L else 0
            key[child] = (lev * base + hot) * base + (om - hot)
        elif mode == 1:
            key[child] = onesA[child, aux_ell] * base + (om - onesA[child, aux_ell])
        else:
            key[child] = om
        evaluations += 1
        if om == n and optimum_eval < 0:
            optimum_eval = evaluations

        # survivor selection: uniform among the minimum-fitness members
        kmin = key[child]
        for t in range(mu):
            if key[slots[t]] < kmin:
                kmin = key[slots[t]]
        ties = 0
        for t in range(mu):
            if key[slots[t]] == kmin:
                ties += 1
        if key[child] == kmin:
            ties += 1
        pick = np.random.randint(0, ties)
        loser = child
        loser_pos = -1
        seen_ties = 0
        for t in range(mu):
            if key[slots[t]] == kmin:
                if seen_ties == pick:
                    loser = slots[t]
                    loser_pos = t
                    break
                seen_ties += 1
        if loser != child:
            slots[loser_pos] = child
        free = loser

        bs = best_of()
        visited[level[bs]] = 1
        if trace_stride > 0 and round_ % trace_stride == 0 and trace_count < trace_buf.shape[0]:
            trace_buf[trace_count, 0] = round_
            trace_buf[trace_count, 1] = evaluations
            trace_buf[trace_count, 2] = onemax[bs]
            trace_buf[trace_count, 3] = level[bs]
            trace_buf[trace_count, 4] = hot_of(bs)
            trace_count += 1
        done = stop_at_optimum and optimum_eval > 0

    bs = best_of()
    if trace_stride > 0 and trace_count < trace_buf.shape[0] and (
            trace_count == 0 or trace_buf[trace_count - 1, 0] != round_):
        trace_buf[trace_count, 0] = round_
        trace_buf[trace_count, 1] = evaluations
        trace_buf[trace_count, 2] = onemax[bs]
        trace_buf[trace_count, 3] = level[bs]
        trace_buf[trace_count, 4] = hot_of(bs)
        trace_count += 1
    return (evaluations, round_, optimum_eval, visited, trace_count,
            onemax[bs], level[bs], hot_of(bs))


_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_MAT = np.empty((0, 0), dtype=np.int64)


def run_ea_fast(cfg: EAConfig, inst: HotTopicInstance | None = None) -> RunRecord:
    """Run the (mu+1)-EA through the compiled loop; no event log support."""
    if cfg.log_events:
        raise ValueError("fast engine does not support event logging; use run_ea")
    if cfg.mode not in _MODE_CODE:
        raise ValueError(f"fast engine supports modes {sorted(_MODE_CODE)}")
    mode = _MODE_CODE[cfg.mode]
    if cfg.mode == "onemax":
        if inst is not None:
            raise ValueError("onemax mode takes no instance")
        if cfg.n is None or cfg.n < 1:
            raise ValueError("onemax mode needs n >= 1")
        n, L = cfg.n, 0
        A_mat = B_mat = _EMPTY_MAT
        tau = mA_data = mB_data = _EMPTY_I64
        mA_indptr = mB_indptr = np.zeros(n + 1, dtype=np.int64)
    else:
        if inst is None:
            raise ValueError(f"{cfg.mode} mode needs a HotTopicInstance")
        if cfg.n is not None and cfg.n != inst.n:
            raise ValueError("cfg.n disagrees with the instance")
        n, L = inst.n, inst.L
        A_mat, B_mat, tau = inst.A_mat, inst.B_mat, inst.tau
        mA_indptr, mA_data = inst._memberA
        mB_indptr, mB_data = inst._memberB
        if cfg.mode == "aux_linear" and not 0 <= cfg.aux_level <= L - 1:
            raise ValueError(f"aux_level must lie in 0..{L - 1}")
    if cfg.c > n:
        raise ValueError(f"mutation parameter c={cfg.c} exceeds n={n}")

    seed = mix64(cfg.master_seed, cfg.stream_id) & 0xFFFFFFFF
    if cfg.trace_stride:
        cap = cfg.max_evaluations // cfg.trace_stride + 3
        trace_buf = np.zeros((cap, 5), dtype=np.int64)
    else:
        trace_buf = np.zeros((1, 5), dtype=np.int64)

    (evaluations, rounds, optimum_eval, visited, trace_count,
     best_om, best_lev, best_hot) = _run_loop(
        A_mat, B_mat, tau, mA_indptr, mA_data, mB_indptr, mB_data,
        cfg.mu, float(cfg.c), n, L, mode, cfg.aux_level,
        cfg.max_evaluations, seed, cfg.stop_at_optimum,
        float(cfg.init_ones_prob), cfg.trace_stride, trace_buf)

    best_om, best_lev, best_hot = int(best_om), int(best_lev), int(best_hot)
    if cfg.mode == "hottopic":
        fv = FitnessValue(best_lev, best_hot if best_lev < L else 0,
                          best_om - (best_hot if best_lev < L else 0))
    elif cfg.mode == "aux_linear":
        fv = FitnessValue(0, best_hot, best_om - best_hot)
    else:
        fv = FitnessValue(0, 0, best_om)
    trace = [TracePoint(int(r), int(e), int(om), int(lv), int(hot), int(om) - int(hot))
             for r, e, om, lv, hot in trace_buf[:int(trace_count)]]
    return RunRecord(
        config=cfg,
        evaluations=int(evaluations),
        rounds=int(rounds),
        optimum_evaluation=int(optimum_eval) if optimum_eval > 0 else None,
        censored=optimum_eval <= 0,
        visited_levels=set(int(v) for v in np.flatnonzero(visited)),
        final_best=fv,
        final_best_onemax=best_om,
        events=None,
        trace=trace,
    )
