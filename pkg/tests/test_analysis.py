"""Tests for the proof-object analysis tools: Z-series, drift, forests,
good events, and the single-step probability estimators."""

import math

import numpy as np
import pytest

from hottopic_ea.analysis import (
    GoodEventParams,
    ZSeries,
    build_family_forest,
    check_good_events,
    couple_forests,
    depth_profile,
    estimate_local_probs,
    extract_z_series,
    measure_lifetimes,
    rank_of,
    simulate_depth_counts,
    simulate_reference_forest,
    truncated_drift,
)
from hottopic_ea.core import BitString
from hottopic_ea.engine import EAConfig, EventLog, RunRecord, run_ea
from hottopic_ea.hottopic import FitnessValue, HotTopicParams, generate_instance
from hottopic_ea.rng import RngStream, mix64


def synthetic_record(events, mu=4, final_ranks=()):
    """RunRecord wrapping hand-written (round, kind, id, parent, rank, onemax)
    tuples; level/hot/rest/flips are filled with placeholders."""
    log = EventLog()
    for rnd, kind, nid, parent, rank, om in events:
        log.append(rnd, kind, nid, parent, rank, om, 0, rank, 0,
                   0 if kind == "birth" else 0)
    cfg = EAConfig(mu=mu, c=1.0, mode="onemax", n=100)
    return RunRecord(config=cfg, evaluations=0, rounds=0, optimum_evaluation=None,
                     censored=True, visited_levels=set(),
                     final_best=FitnessValue(0, 0, 0), final_best_onemax=0,
                     events=log, final_population_ranks=list(final_ranks))


def aux_run(seed=0, mu=15, budget=20_000, n=150, L=3):
    inst = generate_instance(HotTopicParams(n=n, alpha=0.25, beta=0.06,
                                            epsilon=0.1, L=L, seed=mix64(seed, 50)))
    cfg = EAConfig(mu=mu, c=1.0, mode="aux_linear", aux_level=0,
                   max_evaluations=budget, stop_at_optimum=False,
                   master_seed=seed, log_events=True)
    return inst, run_ea(cfg, inst)


class TestRankOf:
    def test_counts_ones_in_set(self):
        x = BitString.from01("10110")
        assert rank_of(x, [1, 2, 3]) == 2
        assert rank_of(x, [2, 5]) == 0
        assert rank_of(x, range(1, 6)) == 3

    def test_rejects_bad_positions(self):
        x = BitString.ones(4)
        with pytest.raises(ValueError):
            rank_of(x, [])
        with pytest.raises(IndexError):
            rank_of(x, [0])
        with pytest.raises(IndexError):
            rank_of(x, [5])


class TestZSeries:
    def test_synthetic_last_death_per_rank(self):
        # deaths at rank 3 with onemax 90, 95, 92 -> Z_3 = 92 (last one wins)
        events = [
            (0, "birth", 0, -1, 3, 90), (0, "birth", 1, -1, 3, 95),
            (0, "birth", 2, -1, 5, 80), (0, "birth", 3, -1, 6, 70),
            (1, "birth", 4, 2, 3, 92), (1, "death", 0, -1, 3, 90),
            (2, "birth", 5, 2, 5, 81), (2, "death", 1, -1, 3, 95),
            (3, "birth", 6, 2, 5, 82), (3, "death", 4, -1, 3, 92),
        ]
        rec = synthetic_record(events, final_ranks=[5, 5, 5, 6])
        z = extract_z_series(rec)
        assert (z.i_min, z.i_max) == (3, 3)
        assert z.z(3) == 92

    def test_gap_rank_inherits_previous_value(self):
        # rank 4 never dies; Z_4 := Z_3
        events = [
            (0, "birth", 0, -1, 3, 88), (0, "birth", 1, -1, 5, 80),
            (1, "birth", 2, 1, 5, 81), (1, "death", 0, -1, 3, 88),
            (2, "birth", 3, 1, 5, 82), (2, "death", 1, -1, 5, 80),
        ]
        rec = synthetic_record(events, final_ranks=[6, 6, 6, 6])
        z = extract_z_series(rec)
        assert z.z(3) == 88
        assert z.z(4) == 88      # gap convention
        assert z.z(5) == 80

    def test_cutoff_below_surviving_ranks(self):
        events = [
            (0, "birth", 0, -1, 2, 50), (0, "birth", 1, -1, 4, 60),
            (1, "birth", 2, 1, 4, 61), (1, "death", 0, -1, 2, 50),
            (2, "birth", 3, 1, 4, 62), (2, "death", 1, -1, 4, 60),
        ]
        # rank 4 still alive at the end, so Z_4 is not final
        rec = synthetic_record(events, final_ranks=[4, 4, 4, 5])
        z = extract_z_series(rec)
        assert z.i_max == 2 and z.z(2) == 50
        with pytest.raises(KeyError):
            z.z(4)

    def test_replay_oracle_on_live_run(self):
        # independent recomputation: last death onemax per rank from a raw scan
        _, rec = aux_run(seed=4)
        z = extract_z_series(rec)
        ev = rec.events
        last = {}
        for k in range(len(ev)):
            if ev.kind[k] == "death":
                last[ev.rank[k]] = ev.onemax[k]
        cutoff = min(rec.final_population_ranks)
        for i in range(z.i_min, z.i_max + 1):
            if i in last and i < cutoff:
                assert z.z(i) == last[i]

    def test_requires_event_log(self):
        inst = generate_instance(HotTopicParams(n=60, alpha=0.25, beta=0.05,
                                                epsilon=0.1, L=2, seed=0))
        rec = run_ea(EAConfig(mu=2, c=1.0, max_evaluations=50,
                              stop_at_optimum=False), inst)
        with pytest.raises(ValueError):
            extract_z_series(rec)


class TestTruncatedDrift:
    def test_constant_series_zero_drift(self):
        z = ZSeries(i_min=0, values=np.full(10, 42, dtype=np.int64))
        est = truncated_drift(z, K=3, mu=50)
        assert est.mean == 0.0 and est.count == 7 and est.stderr == 0.0

    def test_truncation_at_minus_log_mu(self):
        z = ZSeries(i_min=0, values=np.array([100, 0], dtype=np.int64))
        est = truncated_drift(z, K=1, mu=20)
        assert est.mean == pytest.approx(-math.log(20))

    def test_window_arithmetic(self):
        z = ZSeries(i_min=5, values=np.array([10, 9, 9, 12], dtype=np.int64))
        est = truncated_drift(z, K=2, mu=100)
        want = np.array([9 - 10, 12 - 9], dtype=float)
        assert est.count == 2
        assert est.mean == pytest.approx(want.mean())

    def test_shift_invariance(self):
        vals = np.array([30, 28, 29, 25, 26], dtype=np.int64)
        a = truncated_drift(ZSeries(0, vals), K=1, mu=10)
        b = truncated_drift(ZSeries(0, vals + 1000), K=1, mu=10)
        assert a.mean == pytest.approx(b.mean)
        assert np.allclose(a.samples, b.samples)

    def test_validation(self):
        z = ZSeries(i_min=0, values=np.array([1, 2], dtype=np.int64))
        with pytest.raises(ValueError):
            truncated_drift(z, K=0, mu=10)
        with pytest.raises(ValueError):
            truncated_drift(z, K=1, mu=1)
        with pytest.raises(ValueError):
            truncated_drift(z, K=2, mu=10)


class TestFamilyForest:
    def test_root_rule_and_depths(self):
        events = [
            (0, "birth", 0, -1, 1, 10), (0, "birth", 1, -1, 3, 20),
            (1, "birth", 2, 1, 3, 21), (1, "death", 0, -1, 1, 10),
            (2, "birth", 3, 2, 4, 22), (2, "death", 1, -1, 3, 20),
            (3, "birth", 4, 0, 3, 15), (3, "death", 2, -1, 3, 21),
        ]
        rec = synthetic_record(events)
        f = build_family_forest(rec, 3)
        assert set(f.nodes) == {1, 2, 3, 4}
        assert sorted(f.roots) == [1, 4]   # node 4's parent has rank 1 < 3
        assert f.nodes[2].depth == 1 and f.nodes[3].depth == 2
        assert f.root_of(3) == 1
        assert f.nodes[1].death_round == 2
        assert f.nodes[3].death_round is None

    def test_live_run_structure(self):
        _, rec = aux_run(seed=7)
        ranks = [rec.events.rank[k] for k in range(len(rec.events))
                 if rec.events.kind[k] == "birth"]
        i = int(np.percentile(ranks, 80))
        f = build_family_forest(rec, i)
        assert len(f) > 0
        for nid, nd in f.nodes.items():
            assert nd.rank >= i
            if nd.parent is not None:
                par = f.nodes[nd.parent]
                assert nd.depth == par.depth + 1
                assert nd.birth_round > par.birth_round
            else:
                assert nd.depth == 0
            if nd.death_round is not None:
                assert nd.death_round >= nd.birth_round


class TestReferenceProcess:
    def test_root_count_is_rounds_plus_one(self):
        rng = RngStream(1, 0)
        for T in (0, 5, 40):
            f = simulate_reference_forest(mu=5, T=T, rng=rng)
            assert len(f.roots) == T + 1

    def test_depth_profile_matches_materialized(self):
        f = simulate_reference_forest(mu=3, T=30, rng=RngStream(2, 0))
        prof = depth_profile(f)
        assert prof.sum() == len(f)
        assert prof[0] == 31

    def test_depth_counts_match_materialized_distribution(self):
        # binomial recursion vs materialized forest, same (mu, T)
        mu, T, reps, dmax = 8, 40, 1500, 3
        rec_counts = simulate_depth_counts(mu, T, reps, dmax, RngStream(3, 0))
        mat = np.zeros((reps // 5, dmax + 1))
        rng = RngStream(3, 1)
        for r in range(reps // 5):
            prof = depth_profile(simulate_reference_forest(mu, T, rng))
            mat[r, :min(len(prof), dmax + 1)] = prof[:dmax + 1]
        for d in range(dmax + 1):
            m1, m2 = rec_counts[:, d].mean(), mat[:, d].mean()
            s = math.sqrt(rec_counts[:, d].var(ddof=1) / reps
                          + mat[:, d].var(ddof=1) / (reps // 5))
            assert abs(m1 - m2) <= 5 * max(s, 1e-3)

    def test_single_tree_depth_zero_stays_one(self):
        counts = simulate_depth_counts(5, 50, 100, 2, RngStream(4, 0),
                                       single_tree=True)
        assert np.all(counts[:, 0] == 1)


class TestCoupling:
    def test_embedding_preserves_structure(self):
        _, rec = aux_run(seed=11, mu=8, budget=4000)
        round0_ranks = [rec.events.rank[k] for k in range(len(rec.events))
                        if rec.events.round[k] == 0]
        i = max(round0_ranks) + 1
        forest, fprime, mapping = couple_forests(rec, i, RngStream(5, 0),
                                                 horizon=50)
        assert set(mapping) == set(forest.nodes)
        assert len(set(mapping.values())) == len(mapping)  # injective
        for nid, nd in forest.nodes.items():
            img = fprime.nodes[mapping[nid]]
            want_parent = None if nd.parent is None else mapping[nd.parent]
            assert img.parent == want_parent
            assert img.depth == nd.depth

    def test_rejects_initial_high_rank(self):
        _, rec = aux_run(seed=11, mu=8, budget=2000)
        with pytest.raises(ValueError):
            couple_forests(rec, 0, RngStream(0))

    def test_node_cap_aborts(self):
        _, rec = aux_run(seed=11, mu=8, budget=6000)
        round0_ranks = [rec.events.rank[k] for k in range(len(rec.events))
                        if rec.events.round[k] == 0]
        i = max(round0_ranks) + 1
        with pytest.raises(MemoryError):
            couple_forests(rec, i, RngStream(1), max_nodes=20)


class TestLifetimes:
    def test_synthetic(self):
        events = [
            (0, "birth", 0, -1, 2, 10), (0, "birth", 1, -1, 2, 11),
            (3, "birth", 2, 0, 4, 12), (3, "death", 0, -1, 2, 10),
            (7, "birth", 3, 2, 5, 13), (7, "death", 1, -1, 2, 11),
        ]
        rec = synthetic_record(events)
        lt = measure_lifetimes(rec)
        # t_3 = first birth with rank >= 3 (round 3); T_3 = last death rank <= 3 (round 7)
        assert lt[3] == (3, 7)
        assert lt[2] == (0, 7)
        assert lt[4] == (3, 7)

    def test_monotone_in_rank(self):
        _, rec = aux_run(seed=13)
        lt = measure_lifetimes(rec)
        ranks = sorted(lt)
        for a, b in zip(ranks, ranks[1:]):
            assert lt[a][0] <= lt[b][0]   # t_i non-decreasing
            assert lt[a][1] <= lt[b][1]   # T_i non-decreasing


class TestGoodEventParams:
    def test_default_constants(self):
        p = GoodEventParams(c=1.0, alpha=0.25)
        assert p.c_d == pytest.approx(1.0 * 0.5 / 16)
        assert p.c_e == pytest.approx(2 * math.e ** 2 * 1.0 * p.k)
        assert p.K == math.ceil(2 * (p.c_e + 1) / p.c_d)
        assert p.K >= 1

    def test_g_phi_and_eta_window(self):
        p = GoodEventParams(c=1.0, alpha=0.25, phi=0.01, eta=1e-5)
        g = 0.01 * (math.log(8 * math.exp(0.25 + 1)) - math.log(0.01))
        assert p.g_phi == pytest.approx(g)
        assert p.eta_bound == pytest.approx(min(g, 0.5 - g, 0.01 / 128, p.c_d / 6))
        assert p.eta_feasible

    def test_validation(self):
        with pytest.raises(ValueError):
            GoodEventParams(c=1.0, alpha=0.25, phi=1.5)
        with pytest.raises(ValueError):
            GoodEventParams(c=-1.0, alpha=0.25)


class TestGoodEvents:
    def test_vacuous_on_empty_forest(self):
        events = [(0, "birth", 0, -1, 1, 10), (0, "birth", 1, -1, 1, 11)]
        rec = synthetic_record(events)
        f = build_family_forest(rec, 5)
        rep = check_good_events(rec, f, GoodEventParams(c=1.0, alpha=0.25),
                                i=5, mu=4, n=100, epsilon=0.1)
        assert rep.all_good and rep.root_count == 0

    def test_only_root_bound_violated(self):
        # many roots, no upward spawns: only E_b fails
        mu, eps = 4, 0.01
        events = [(0, "birth", 0, -1, 1, 10)]
        for t in range(1, 30):
            events.append((t, "birth", t, 0, 5, 10))   # parent rank 1 < 5: root
            events.append((t, "death", t, -1, 5, 10))
        rec = synthetic_record(events, mu=mu)
        f = build_family_forest(rec, 5)
        rep = check_good_events(rec, f, GoodEventParams(c=1.0, alpha=0.25),
                                i=5, mu=mu, n=100, epsilon=eps)
        assert rep.root_count == 29
        assert not rep.e_b
        assert rep.e_a and rep.e_c and rep.e_e and rep.e_d is not False
        assert not rep.all_good

    def test_rank_skip_violates_e_a(self):
        events = [
            (0, "birth", 0, -1, 3, 10),
            (1, "birth", 1, 0, 6, 12),   # rank 3 parent -> rank 6 child, i = 5
            (1, "death", 0, -1, 3, 10),
        ]
        rec = synthetic_record(events)
        f = build_family_forest(rec, 5)
        rep = check_good_events(rec, f, GoodEventParams(c=1.0, alpha=0.25),
                                i=5, mu=4, n=100, epsilon=0.1)
        assert not rep.e_a

    def test_threshold_mismatch_rejected(self):
        events = [(0, "birth", 0, -1, 1, 10)]
        rec = synthetic_record(events)
        f = build_family_forest(rec, 3)
        with pytest.raises(ValueError):
            check_good_events(rec, f, GoodEventParams(c=1.0, alpha=0.25),
                              i=4, mu=4, n=100, epsilon=0.1)

    def test_live_run_produces_verdicts(self):
        _, rec = aux_run(seed=17)
        ranks = [rec.events.rank[k] for k in range(len(rec.events))
                 if rec.events.kind[k] == "birth"]
        i = int(np.percentile(ranks, 85))
        f = build_family_forest(rec, i)
        rep = check_good_events(rec, f, GoodEventParams(c=1.0, alpha=0.25),
                                i=i, mu=rec.config.mu, n=150, epsilon=0.1)
        assert isinstance(rep.e_a, bool) and isinstance(rep.e_e, bool)
        assert rep.root_count == len(f.roots)


class TestLocalProbs:
    def test_zero_rate_degenerate(self):
        x = BitString.ones(100)
        est = estimate_local_probs(x, range(1, 26), 0.0, 500, RngStream(0, 0))
        assert est.p_hat_r == 1.0 and est.p_hat_i == 0.0

    def test_eps_x_computed_from_genome(self):
        bits = np.ones(100, dtype=np.uint8)
        bits[:5] = 0   # 5 zeros inside A = 1..25
        est = estimate_local_probs(BitString(bits), range(1, 26), 1.0, 10,
                                   RngStream(0, 1))
        assert est.eps_x == pytest.approx(5 / 25)
        assert est.p_u_bound == pytest.approx(0.2 * 0.25 * 1.0)
        assert est.p_l_bound == pytest.approx(0.2 * 0.25 * 0.5 * math.exp(-0.25))

    def test_estimates_respect_analytic_bounds(self):
        n = 1000
        bits = np.ones(n, dtype=np.uint8)
        an = n // 4
        bits[:int(0.08 * an)] = 0
        x = BitString(bits)
        for c in (0.8, 1.5):
            est = estimate_local_probs(x, range(1, an + 1), c, 30_000,
                                       RngStream(9, int(10 * c)))
            assert est.p_hat_r >= est.p_r_bound - 5 * est.sigma(est.p_r_bound)
            lo = est.p_l_bound - 5 * est.sigma(est.p_u_bound)
            hi = est.p_u_bound + 5 * est.sigma(est.p_u_bound)
            assert lo <= est.p_hat_i <= hi
            assert est.ratio_hat <= est.ratio_bound + 5 * est.sigma(est.ratio_bound)

    def test_validation(self):
        x = BitString.ones(10)
        with pytest.raises(ValueError):
            estimate_local_probs(x, [1], 1.0, 0, RngStream(0))
        with pytest.raises(ValueError):
            estimate_local_probs(x, [], 1.0, 10, RngStream(0))
