"""Acceptance gate.

One test per release criterion; each prints a single CRITERION n: PASS/FAIL
line with the measured quantities, then asserts.  Criteria are checked at
desk scale (n around 1000-3000); the full-scale configuration is available
through the paper preset but is not exercised here.
"""

import math
import os

import numpy as np
import pytest
from scipy import stats

from hottopic_ea.analysis import (
    GoodEventParams,
    build_family_forest,
    couple_forests,
    estimate_local_probs,
    extract_z_series,
    simulate_depth_counts,
    simulate_reference_forest,
    truncated_drift,
)
from hottopic_ea.core import BitString, standard_mutation
from hottopic_ea.engine import EAConfig, run_ea
from hottopic_ea.experiments import ExperimentConfig, run_sweep
from hottopic_ea.fastengine import run_ea_fast
from hottopic_ea.hottopic import (
    FitnessValue,
    HotTopicParams,
    apply_flips,
    evaluate_ht,
    generate_instance,
    make_cached,
)
from hottopic_ea.rng import RngStream, mix64


def report(num: int, ok: bool, msg: str) -> None:
    print(f"\nCRITERION {num}: {'PASS' if ok else 'FAIL'} - {msg}")
    assert ok, f"criterion {num}: {msg}"


DESK = dict(n=3000, alpha=0.25, beta=0.05, epsilon=0.05, L=50)


class TestCriterion1:
    def test_incremental_caches_exact(self):
        inst = generate_instance(HotTopicParams(n=500, alpha=0.25, beta=0.05,
                                                epsilon=0.05, L=50, seed=11))
        rng = RngStream(100, 0)
        cur = make_cached(inst, BitString(rng.gen.integers(0, 2, 500, dtype=np.uint8)))
        steps = 100_000
        mismatches = 0
        for _ in range(steps):
            _, flips = standard_mutation(cur.genome, 1.3, rng)
            cur = apply_flips(inst, cur, flips)
            scratch = make_cached(inst, cur.genome)
            if not (cur.onemax == scratch.onemax
                    and cur.level == scratch.level
                    and cur.fitness == scratch.fitness
                    and np.array_equal(cur.onesA, scratch.onesA)
                    and np.array_equal(cur.zerosB, scratch.zerosB)):
                mismatches += 1
        report(1, mismatches == 0,
               f"{steps} mutation steps, {mismatches} cache/scratch mismatches "
               "(zero tolerance)")


class TestCriterion2:
    def test_strict_monotonicity_and_order_equivalence(self):
        rng = RngStream(200, 0)
        violations = 0
        pairs_per_instance = 10_000
        for k in range(5):
            inst = generate_instance(HotTopicParams(n=300, alpha=0.25, beta=0.05,
                                                    epsilon=0.05, L=15,
                                                    seed=mix64(200, k)))
            for _ in range(pairs_per_instance):
                bits = rng.gen.integers(0, 2, 300, dtype=np.uint8)
                zeros = np.flatnonzero(bits == 0)
                if zeros.size == 0:
                    continue
                m = int(rng.gen.integers(1, zeros.size + 1))
                chosen = rng.gen.permutation(zeros)[:m]
                x = BitString(bits)
                y = x.with_flips((chosen + 1).tolist())
                if not evaluate_ht(inst, y) > evaluate_ht(inst, x):
                    violations += 1
        n = 12
        inst = generate_instance(HotTopicParams(n=n, alpha=0.5, beta=0.25,
                                                epsilon=0.3, L=3, seed=201))
        order_bad = 0
        vals = []
        for v in range(2 ** n):
            x = BitString.from01(format(v, f"0{n}b"))
            fv = evaluate_ht(inst, x)
            vals.append((fv, fv.scalar(n)))
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                if (vals[i][0] < vals[j][0]) != (vals[i][1] < vals[j][1]):
                    order_bad += 1
                    break
            if order_bad:
                break
        ok = violations == 0 and order_bad == 0
        report(2, ok,
               f"5x{pairs_per_instance} dominated pairs: {violations} violations; "
               f"exhaustive n={n} lexicographic/scalar order equivalence "
               f"{'holds' if order_bad == 0 else 'broken'}")


class TestCriterion3:
    def test_single_step_probability_bounds(self):
        n, samples = 2000, 100_000
        an = n // 4
        bits = np.ones(n, dtype=np.uint8)
        bits[:int(0.05 * an)] = 0       # zero-density 0.05 on A = 1..an
        x = BitString(bits)
        msgs, ok = [], True
        for c in (0.5, 1.0, 2.0):
            est = estimate_local_probs(x, range(1, an + 1), c, samples,
                                       RngStream(300, int(10 * c)))
            lo_r = est.p_r_bound - 5 * est.sigma(est.p_r_bound)
            lo_i = est.p_l_bound - 5 * est.sigma(est.p_u_bound)
            hi_i = est.p_u_bound + 5 * est.sigma(est.p_u_bound)
            c_ok = est.p_hat_r >= lo_r and lo_i <= est.p_hat_i <= hi_i
            ok &= c_ok
            msgs.append(f"c={c}: p_r={est.p_hat_r:.4f}>={lo_r:.4f}, "
                        f"p_i={est.p_hat_i:.5f} in [{lo_i:.5f},{hi_i:.5f}]")
        report(3, ok, "; ".join(msgs))


class TestCriterion4:
    def test_reference_process_bounds_and_embedding(self):
        mu, T, reps, dmax = 50, 500, 10_000, 5
        counts = simulate_depth_counts(mu, T, reps, dmax, RngStream(400, 0),
                                       single_tree=True)
        depth_ok = True
        worst = ""
        for d in range(dmax + 1):
            bound = T ** d / (math.factorial(d) * mu ** d)
            mean = float(counts[:, d].mean())
            sigma = float(counts[:, d].std(ddof=1)) / math.sqrt(reps)
            limit = bound * (1 + 5 * sigma / max(bound, 1e-12))
            if mean > limit:
                depth_ok = False
                worst = f" (d={d}: mean {mean:.3f} > {limit:.3f})"
        forest_counts = simulate_depth_counts(mu, T, reps, 0, RngStream(400, 1))
        roots_ok = bool(np.all(forest_counts[:, 0] == T + 1))
        rng = RngStream(400, 2)
        for _ in range(20):
            f = simulate_reference_forest(mu=10, T=60, rng=rng)
            roots_ok &= len(f.roots) == 61

        embed_ok = True
        for mu_c in (10, 20):
            inst = generate_instance(HotTopicParams(n=200, alpha=0.25, beta=0.06,
                                                    epsilon=0.1, L=3,
                                                    seed=mix64(401, mu_c)))
            cfg = EAConfig(mu=mu_c, c=1.0, mode="aux_linear", aux_level=0,
                           max_evaluations=5000, stop_at_optimum=False,
                           master_seed=mix64(402, mu_c), log_events=True)
            rec = run_ea(cfg, inst)
            i = max(rec.events.rank[k] for k in range(len(rec.events))
                    if rec.events.round[k] == 0) + 1
            forest, fprime, mapping = couple_forests(rec, i, RngStream(403, mu_c),
                                                     horizon=8 * mu_c)
            if set(mapping) != set(forest.nodes):
                embed_ok = False
            for nid, nd in forest.nodes.items():
                img = fprime.nodes[mapping[nid]]
                want = None if nd.parent is None else mapping[nd.parent]
                if img.parent != want or img.depth != nd.depth:
                    embed_ok = False
        ok = depth_ok and roots_ok and embed_ok
        report(4, ok,
               f"depth-count bound d<=5 over {reps} reps "
               f"{'holds' if depth_ok else 'violated' + worst}; "
               f"root count T+1 {'exact' if roots_ok else 'wrong'}; "
               f"subgraph embedding at mu in {{10,20}} "
               f"{'holds' if embed_ok else 'broken'}")


class TestCriterion5:
    def test_visited_levels_trend_in_mu(self):
        cfg = ExperimentConfig(**DESK, mu_grid=(5, 10, 20, 50, 100, 200),
                               c=1.0, runs=10, budget=300_000_000,
                               master_seed=500, threads=8)
        res = run_sweep(cfg, "mu")
        means = [float(np.mean(p.visited_counts)) for p in res.points]
        mus = [p.mu for p in res.points]
        rho = float(stats.spearmanr(mus, means).statistic)
        clause1 = rho >= 0.8
        clause2 = any(m <= 0.5 * cfg.L for m in means)
        full = [sum(1 for v in p.visited_counts if v == cfg.L) for p in res.points]
        clause3 = any(f >= 8 for f in full)
        ok = clause1 and clause2 and clause3
        report(5, ok,
               f"mean visited per mu {dict(zip(mus, [round(m, 1) for m in means]))}; "
               f"Spearman rho={rho:.3f} (>=0.8: {clause1}); "
               f"some mean <= L/2: {clause2}; "
               f"full-visit runs per mu {dict(zip(mus, full))}, "
               f"some >= 8/10: {clause3}")


class TestCriterion6:
    def test_runtime_proportional_to_levels_at_large_c(self):
        c_grid = (0.8, 1.0, 1.2, 1.4)
        means = {}
        for L in (50, 100):
            cfg = ExperimentConfig(n=3000, alpha=0.25, beta=0.05, epsilon=0.05,
                                   L=L, mu=50, c_grid=c_grid, runs=10,
                                   budget=300_000_000, master_seed=600, threads=8)
            res = run_sweep(cfg, "c")
            p = res.points[-1]           # largest c in the grid
            assert p.c == c_grid[-1]
            assert not any(p.censored)
            means[L] = float(np.mean(p.evaluations))
        ratio = means[100] / means[50]
        ok = 1.5 <= ratio <= 2.5
        report(6, ok,
               f"c={c_grid[-1]}, mu=50: mean runtime L=50 {means[50]:.0f}, "
               f"L=100 {means[100]:.0f}, ratio {ratio:.2f} (need [1.5, 2.5])")


class TestCriterion7:
    def test_negative_truncated_drift(self):
        params = GoodEventParams(c=1.0, alpha=0.25)
        K = params.K
        eps = DESK["epsilon"]
        samples = []
        windows = 0
        series_lens = []
        for r in range(3):
            inst = generate_instance(HotTopicParams(**DESK, seed=mix64(700, r)))
            cfg = EAConfig(mu=200, c=1.0, mode="aux_linear", aux_level=0,
                           max_evaluations=60_000, stop_at_optimum=False,
                           master_seed=mix64(701, r), log_events=True,
                           init_ones_prob=1 - 1.5 * eps)
            rec = run_ea(cfg, inst)
            z = extract_z_series(rec)
            series_lens.append(len(z))
            if len(z) >= K + 1:
                est = truncated_drift(z, K, cfg.mu)
                samples.extend(est.samples.tolist())
                windows += est.count
        if windows >= 200:
            arr = np.asarray(samples)
            mean = float(arr.mean())
            half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
            ok = mean + half < 0
            report(7, ok,
                   f"K={K}, {windows} windows, drift {mean:.3f} +- {half:.3f} "
                   f"(95% CI upper bound {'<' if ok else '>='} 0)")
        else:
            max_ranks = int(DESK["alpha"] * DESK["n"])
            report(7, False,
                   f"insufficient rank windows: K={K} from the default constants "
                   f"exceeds the available rank range (at most {max_ranks} ranks "
                   f"at n={DESK['n']}; observed series lengths {series_lens}), "
                   f"yielding {windows} windows where 200 are required; the "
                   f"window width only fits the rank range once n is far larger")


class TestCriterion8:
    def test_single_individual_baseline_is_fast(self):
        n, L = 1000, 20
        inst = generate_instance(HotTopicParams(n=n, alpha=0.25, beta=0.05,
                                                epsilon=0.05, L=L, seed=800))
        bound = 50 * n * math.log(n)
        hits = 0
        evs = []
        for r in range(10):
            rec = run_ea_fast(EAConfig(mu=1, c=0.5, max_evaluations=2_000_000,
                                       master_seed=mix64(801, r)), inst)
            evs.append(rec.evaluations)
            if not rec.censored and rec.evaluations <= bound:
                hits += 1
        ok = hits >= 9
        report(8, ok,
               f"mu=1, c=0.5, n={n}: optimum within {int(bound)} evaluations in "
               f"{hits}/10 runs (max observed {max(evs)})")


class TestCriterion10:
    """Secondary component: all four figure kinds render from driver CSVs."""

    def test_all_figure_kinds_render(self, tmp_path, capsys):
        import importlib.util
        import sys

        from hottopic_ea.experiments import min_mu_search, run_trajectory

        plots_dir = os.path.join(os.path.dirname(__file__), os.pardir, "plots")
        if plots_dir not in sys.path:
            sys.path.insert(0, plots_dir)

        def script(name):
            spec = importlib.util.spec_from_file_location(
                name, os.path.join(plots_dir, f"{name}.py"))
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod

        # small desk-style CSV fixtures from the real drivers
        base = dict(n=600, alpha=0.25, beta=0.05, epsilon=0.05, runs=4,
                    budget=2_000_000, master_seed=1000, threads=4)
        d = str(tmp_path)
        run_trajectory(ExperimentConfig(**base, L=10, mu=10, c=1.0,
                                        trace_stride=200), d)
        run_sweep(ExperimentConfig(**base, L=10, c=1.0,
                                  mu_grid=(5, 10, 20)), "mu", d)
        for L in (10, 20):
            run_sweep(ExperimentConfig(**base, L=L, mu=20, c_grid=(0.8, 1.2)),
                      "c", d, file_prefix=f"sweep_c_L{L}")
        min_mu_search(ExperimentConfig(**base, L=10, c_grid=(2.0,), mu_cap=64), d)

        figs = {}
        figs["trajectory"] = os.path.join(d, "fig_traj.png")
        script("plot_trajectory").main(
            ["--in", os.path.join(d, "trajectory_envelope.csv"),
             "--out", figs["trajectory"]])
        figs["mu-sweep"] = os.path.join(d, "fig_mu.png")
        script("plot_sweep").main(
            ["--in", os.path.join(d, "sweep_mu.csv"), "--out", figs["mu-sweep"]])
        figs["c-sweep-2L"] = os.path.join(d, "fig_c.png")
        script("plot_sweep").main(
            ["--in", os.path.join(d, "sweep_c_L10.csv"),
             os.path.join(d, "sweep_c_L20.csv"),
             "--out", figs["c-sweep-2L"], "--label", "L=10", "L=20"])
        figs["min-mu"] = os.path.join(d, "fig_minmu.png")
        script("plot_minmu").main(
            ["--in", os.path.join(d, "minmu.csv"), "--out", figs["min-mu"]])

        sizes = {k: os.path.getsize(p) for k, p in figs.items()}
        render_ok = all(s > 0 for s in sizes.values())

        # error bars on sweep figures equal stddevs recomputed from rows
        import csv as csvmod
        with open(os.path.join(d, "sweep_mu.csv"), encoding="utf-8") as fh:
            fh.readline()
            rows = list(csvmod.DictReader(fh))
        pts = script("plot_sweep").series(rows, "evaluations")
        bars_ok = True
        for mu, c, mean, std in pts:
            ev = [int(r["evaluations"]) for r in rows if int(r["mu"]) == mu]
            if not (abs(mean - np.mean(ev)) < 1e-9
                    and abs(std - np.std(ev, ddof=1)) < 1e-9):
                bars_ok = False
        capsys.readouterr()
        report(10, render_ok and bars_ok,
               f"figure sizes {sizes} (all non-empty: {render_ok}); "
               f"sweep error bars equal row-level sample stddevs: {bars_ok}")


class TestCriterion9:
    def test_worker_count_does_not_change_output_bytes(self, tmp_path):
        identical = True
        dirs = {}
        for threads in (1, 8):
            cfg = ExperimentConfig(n=1000, alpha=0.25, beta=0.05, epsilon=0.05,
                                   L=10, c=1.0, mu_grid=(2, 8), runs=4,
                                   budget=5_000_000, master_seed=900,
                                   threads=threads)
            d = tmp_path / f"t{threads}"
            run_sweep(cfg, "mu", str(d))
            dirs[threads] = d
        for name in ("sweep_mu.csv", "sweep_mu_summary.csv"):
            b1 = (dirs[1] / name).read_bytes()
            b8 = (dirs[8] / name).read_bytes()
            identical &= b1 == b8
        report(9, identical,
               "sweep CSVs byte-identical with 1 and 8 worker threads"
               if identical else "CSV bytes differ between worker counts")
