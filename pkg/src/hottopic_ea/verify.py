"""Self-check suites runnable from the command line.

Each suite returns a report of named checks.  These are quick, seeded
versions of the package's property tests; the full-strength versions live in
the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .analysis import (
    ZSeries,
    build_family_forest,
    couple_forests,
    estimate_local_probs,
    extract_z_series,
    simulate_depth_counts,
    truncated_drift,
)
from .core import BitString, standard_mutation
from .engine import EAConfig, run_ea
from .hottopic import (
    HotTopicParams,
    apply_flips,
    evaluate_ht,
    generate_instance,
    make_cached,
)
from .rng import RngStream, mix64

SUITES = ("exactness", "monotonicity", "lemma1", "forest", "drift")


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def lines(self) -> list[str]:
        out = [f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            out.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}"
                       + (f" - {c.detail}" if c.detail else ""))
        return out


def run_suite(name: str, seed: int = 0,
              corrupt: Optional[Callable] = None) -> SuiteReport:
    """Run one verification suite.  ``corrupt`` is a test hook that may
    tamper with a cached individual before the exactness comparison."""
    if name == "exactness":
        return _suite_exactness(seed, corrupt)
    if name == "monotonicity":
        return _suite_monotonicity(seed)
    if name == "lemma1":
        return _suite_lemma1(seed)
    if name == "forest":
        return _suite_forest(seed)
    if name == "drift":
        return _suite_drift(seed)
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")


def _suite_exactness(seed: int, corrupt: Optional[Callable]) -> SuiteReport:
    rep = SuiteReport("exactness")
    params = HotTopicParams(n=300, alpha=0.25, beta=0.05, epsilon=0.05, L=20,
                            seed=mix64(seed, 1))
    inst = generate_instance(params)
    rng = RngStream(seed, 2)
    cur = make_cached(inst, BitString(rng.gen.integers(0, 2, params.n, dtype=np.uint8)))
    for _ in range(5000):
        _, flips = standard_mutation(cur.genome, 1.3, rng)
        cur = apply_flips(inst, cur, flips)
    if corrupt is not None:
        corrupt(cur)
    scratch = make_cached(inst, cur.genome)
    for fname in ("onemax", "level", "fitness"):
        ok = getattr(cur, fname) == getattr(scratch, fname)
        rep.add(f"incremental {fname} equals scratch", ok,
                "" if ok else f"{fname}: {getattr(cur, fname)} != {getattr(scratch, fname)}")
    for fname in ("onesA", "zerosB"):
        ok = bool(np.array_equal(getattr(cur, fname), getattr(scratch, fname)))
        rep.add(f"incremental {fname} equals scratch", ok,
                "" if ok else f"{fname} diverged")
    return rep


def _suite_monotonicity(rep_seed: int) -> SuiteReport:
    rep = SuiteReport("monotonicity")
    rng = RngStream(rep_seed, 3)
    violations = 0
    for k in range(2):
        params = HotTopicParams(n=200, alpha=0.25, beta=0.05, epsilon=0.05, L=10,
                                seed=mix64(rep_seed, 4, k))
        inst = generate_instance(params)
        for _ in range(1000):
            bits = rng.gen.integers(0, 2, params.n, dtype=np.uint8)
            zeros = np.flatnonzero(bits == 0)
            if zeros.size == 0:
                continue
            m = int(rng.gen.integers(1, zeros.size + 1))
            chosen = rng.gen.permutation(zeros)[:m]
            x = BitString(bits)
            y = x.with_flips((chosen + 1).tolist())
            if not evaluate_ht(inst, y) > evaluate_ht(inst, x):
                violations += 1
    rep.add("dominated pairs strictly ordered", violations == 0,
            f"{violations} violations" if violations else "")
    return rep


def _suite_lemma1(seed: int) -> SuiteReport:
    rep = SuiteReport("lemma1")
    n = 2000
    rng = RngStream(seed, 5)
    an = n // 4
    A = list(range(1, an + 1))
    bits = np.ones(n, dtype=np.uint8)
    zeros_in_a = int(0.05 * an)
    bits[:zeros_in_a] = 0
    x = BitString(bits)
    for c in (0.5, 1.0, 2.0):
        est = estimate_local_probs(x, A, c, samples=20_000, rng=rng.spawn(int(c * 10)))
        s_r = 5 * est.sigma(est.p_r_bound)
        rep.add(f"c={c}: p_hat_r above e^(-alpha c)/2",
                est.p_hat_r >= est.p_r_bound - s_r,
                f"p_hat_r={est.p_hat_r:.4f} bound={est.p_r_bound:.4f}")
        s_i = 5 * est.sigma(est.p_u_bound)
        rep.add(f"c={c}: p_hat_i inside [p_l, p_u]",
                est.p_l_bound - s_i <= est.p_hat_i <= est.p_u_bound + s_i,
                f"p_hat_i={est.p_hat_i:.5f} in [{est.p_l_bound:.5f}, {est.p_u_bound:.5f}]")
    return rep


def _suite_forest(seed: int) -> SuiteReport:
    rep = SuiteReport("forest")
    mu, T, reps, dmax = 20, 100, 2000, 3
    counts = simulate_depth_counts(mu, T, reps, dmax, RngStream(seed, 6),
                                   single_tree=True)
    ok_all = True
    detail = []
    for d in range(dmax + 1):
        bound = T ** d / (math.factorial(d) * mu ** d)
        mean = float(counts[:, d].mean())
        sigma = float(counts[:, d].std(ddof=1)) / math.sqrt(reps)
        if mean > bound * (1 + 5 * sigma / max(bound, 1e-12)) + 1e-9:
            ok_all = False
        detail.append(f"d={d}: mean={mean:.2f} bound={bound:.2f}")
    rep.add("single-tree depth counts within closed-form bound", ok_all,
            "; ".join(detail))

    params = HotTopicParams(n=120, alpha=0.25, beta=0.05, epsilon=0.1, L=3,
                            seed=mix64(seed, 7))
    inst = generate_instance(params)
    cfg = EAConfig(mu=10, c=1.0, mode="aux_linear", aux_level=0,
                   max_evaluations=4000, stop_at_optimum=False,
                   master_seed=seed, stream_id=8, log_events=True)
    rec = run_ea(cfg, inst)
    i = max(rec.events.rank[k] for k in range(len(rec.events))
            if rec.events.round[k] == 0 and rec.events.kind[k] == "birth") + 1
    forest, fprime, mapping = couple_forests(rec, i, RngStream(seed, 9), horizon=60)
    ok = len(mapping) == len(forest.nodes) and len(set(mapping.values())) == len(mapping)
    for nid, nd in forest.nodes.items():
        fp = fprime.nodes[mapping[nid]]
        want = None if nd.parent is None else mapping[nd.parent]
        if fp.parent != want:
            ok = False
            break
    rep.add("family forest embeds into reference process", ok,
            f"{len(forest.nodes)} nodes, {len(fprime.nodes)} reference nodes")
    return rep


def _suite_drift(seed: int) -> SuiteReport:
    rep = SuiteReport("drift")
    z = ZSeries(i_min=10, values=np.array([50, 48, 47, 47, 45, 44], dtype=np.int64))
    est = truncated_drift(z, K=2, mu=100)
    want = np.maximum(np.array([47 - 50, 47 - 48, 45 - 47, 44 - 47], dtype=float),
                      -math.log(100))
    ok = est.count == 4 and abs(est.mean - want.mean()) < 1e-12
    rep.add("truncated drift arithmetic oracle", ok,
            f"mean={est.mean:.4f} expected={want.mean():.4f}")

    params = HotTopicParams(n=150, alpha=0.25, beta=0.06, epsilon=0.1, L=3,
                            seed=mix64(seed, 10))
    inst = generate_instance(params)
    cfg = EAConfig(mu=20, c=1.0, mode="aux_linear", aux_level=0,
                   max_evaluations=30_000, stop_at_optimum=False,
                   master_seed=seed, stream_id=11, log_events=True)
    rec = run_ea(cfg, inst)
    z2 = extract_z_series(rec)
    ok2 = len(z2) > 5
    if ok2:
        est2 = truncated_drift(z2, K=3, mu=cfg.mu)
        rep.add("drift estimator runs on a live series", True,
                f"{est2.count} windows, mean={est2.mean:.3f}")
    else:
        rep.add("drift estimator runs on a live series", False,
                f"series too short ({len(z2)} ranks)")
    return rep
