"""Command-line front end.

Subcommands: generate, trajectory, sweep-mu, sweep-c, min-mu, forest-stats,
drift, verify.  Common flags: --config PATH, --seed U64, --out DIR, --runs N,
--preset {desk,paper}, --threads N.  Flags override config-file values.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

import numpy as np

from .analysis import (
    GoodEventParams,
    build_family_forest,
    depth_profile,
    extract_z_series,
    truncated_drift,
)
from .engine import EAConfig, run_ea
from .experiments import (
    PRESETS,
    ExperimentConfig,
    build_config,
    min_mu_search,
    parse_config_file,
    run_sweep,
    run_trajectory,
    _write_csv,
    _write_metadata,
)
from .hottopic import generate_instance
from .rng import mix64
from .verify import SUITES, run_suite


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value config file")
    p.add_argument("--seed", type=int, metavar="U64", help="master seed")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory")
    p.add_argument("--runs", type=int, metavar="N", help="runs per grid point")
    p.add_argument("--preset", choices=sorted(PRESETS), help="scale preset")
    p.add_argument("--threads", type=int, metavar="N", help="worker processes")
    p.add_argument("--mu", type=int, help="population size")
    p.add_argument("--c", type=float, help="mutation parameter")
    p.add_argument("--budget", type=int, help="evaluation budget per run")


def _build(args: argparse.Namespace, **extra) -> ExperimentConfig:
    values = parse_config_file(args.config) if args.config else {}
    if args.preset:
        values.update(PRESETS[args.preset])
        if args.preset == "paper":
            warnings.warn("paper-scale preset selected; sweeps may take hours",
                          RuntimeWarning)
    overrides = dict(
        master_seed=args.seed,
        runs=args.runs,
        threads=args.threads,
        mu=args.mu,
        c=args.c,
        budget=args.budget,
    )
    overrides.update(extra)
    return build_config(values, **overrides)


def _parse_grid(text: str, typ):
    return tuple(typ(v) for v in text.split(",") if v.strip())


def main(argv=None) -> int:
    top = argparse.ArgumentParser(prog="hottopic-ea")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate an instance and dump it")
    _add_common(p)

    p = sub.add_parser("trajectory", help="traced runs at one (mu, c) point")
    _add_common(p)
    p.add_argument("--trace-stride", type=int, help="rounds between trace rows")

    p = sub.add_parser("sweep-mu", help="runtime sweep over a mu grid")
    _add_common(p)
    p.add_argument("--mu-grid", help="comma-separated mu values")

    p = sub.add_parser("sweep-c", help="runtime sweep over a c grid")
    _add_common(p)
    p.add_argument("--c-grid", help="comma-separated c values")

    p = sub.add_parser("min-mu", help="minimal mu per c for full level descent")
    _add_common(p)
    p.add_argument("--c-grid", help="comma-separated c values")
    p.add_argument("--mu-cap", type=int, help="largest mu to try")

    p = sub.add_parser("forest-stats", help="family forest statistics of an "
                                            "instrumented fixed-level run")
    _add_common(p)
    p.add_argument("--rank", type=int, help="rank threshold (default: from data)")
    p.add_argument("--aux-level", type=int, default=0, help="fixed level (0-based)")

    p = sub.add_parser("drift", help="truncated drift estimate from "
                                     "instrumented fixed-level runs")
    _add_common(p)
    p.add_argument("--aux-level", type=int, default=0, help="fixed level (0-based)")
    p.add_argument("--K", type=int, help="window width (default: from constants)")
    p.add_argument("--init-ones-prob", type=float, default=0.5,
                   help="biased initialization for regime studies")

    p = sub.add_parser("verify", help="run self-check suites")
    _add_common(p)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")

    args = top.parse_args(argv)
    return _dispatch(args)


def _dispatch(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "verify":
        cfg = _build(args)
        names = SUITES if args.suite == "all" else (args.suite,)
        ok = True
        for name in names:
            rep = run_suite(name, seed=cfg.master_seed)
            ok &= rep.passed
            print("\n".join(rep.lines()))
        return 0 if ok else 1

    extra = {}
    if cmd == "trajectory" and args.trace_stride is not None:
        extra["trace_stride"] = args.trace_stride
    if cmd == "sweep-mu" and args.mu_grid:
        extra["mu_grid"] = _parse_grid(args.mu_grid, int)
    if cmd in ("sweep-c", "min-mu") and args.c_grid:
        extra["c_grid"] = _parse_grid(args.c_grid, float)
    if cmd == "min-mu" and args.mu_cap is not None:
        extra["mu_cap"] = args.mu_cap
    cfg = _build(args, **extra)
    os.makedirs(args.out, exist_ok=True)

    if cmd == "generate":
        inst = generate_instance(cfg.instance_params())
        path = os.path.join(args.out, "instance.txt")
        with open(path, "w", encoding="utf-8") as fh:
            inst.dump(fh)
        print(path)
        return 0
    if cmd == "trajectory":
        for path in run_trajectory(cfg, args.out):
            print(path)
        return 0
    if cmd == "sweep-mu":
        run_sweep(cfg, "mu", out_dir=args.out)
        print(os.path.join(args.out, "sweep_mu.csv"))
        return 0
    if cmd == "sweep-c":
        run_sweep(cfg, "c", out_dir=args.out)
        print(os.path.join(args.out, "sweep_c.csv"))
        return 0
    if cmd == "min-mu":
        min_mu_search(cfg, out_dir=args.out)
        print(os.path.join(args.out, "minmu.csv"))
        return 0
    if cmd == "forest-stats":
        return _forest_stats(cfg, args)
    if cmd == "drift":
        return _drift(cfg, args)
    raise AssertionError(f"unhandled command {cmd}")


def _aux_run(cfg: ExperimentConfig, args, run_index: int, init_ones_prob=0.5):
    inst = generate_instance(cfg.instance_params())
    ea = EAConfig(mu=cfg.mu, c=cfg.c, mode="aux_linear", aux_level=args.aux_level,
                  max_evaluations=cfg.budget, stop_at_optimum=False,
                  master_seed=mix64(cfg.master_seed, 0, run_index),
                  log_events=True, init_ones_prob=init_ones_prob)
    return inst, run_ea(ea, inst)


def _forest_stats(cfg: ExperimentConfig, args) -> int:
    t0 = time.time()
    _, rec = _aux_run(cfg, args, 0)
    ranks = [rec.events.rank[k] for k in range(len(rec.events))]
    i = args.rank if args.rank is not None else int(np.percentile(ranks, 90))
    forest = build_family_forest(rec, i)
    prof = depth_profile(forest)
    rows = [f"{d},{int(c)}" for d, c in enumerate(prof)]
    _write_csv(os.path.join(args.out, "forest_stats.csv"), "forest.v1",
               "depth,count", rows)
    _write_metadata(args.out, "forest_stats", cfg, time.time() - t0,
                    extra={"rank_threshold": i, "roots": len(forest.roots),
                           "nodes": len(forest)})
    print(os.path.join(args.out, "forest_stats.csv"))
    return 0


def _drift(cfg: ExperimentConfig, args) -> int:
    t0 = time.time()
    params = GoodEventParams(c=cfg.c, alpha=cfg.alpha)
    K = args.K if args.K is not None else params.K
    rows = []
    total = 0
    for r in range(cfg.runs):
        _, rec = _aux_run(cfg, args, r, init_ones_prob=args.init_ones_prob)
        z = extract_z_series(rec)
        if len(z) < K + 1:
            rows.append(f"{r},{len(z)},0,,")
            continue
        est = truncated_drift(z, K, cfg.mu)
        total += est.count
        rows.append(f"{r},{len(z)},{est.count},{est.mean!r},{est.stderr!r}")
    _write_csv(os.path.join(args.out, "drift.csv"), "drift.v1",
               "run,series_len,windows,mean,stderr", rows)
    _write_metadata(args.out, "drift", cfg, time.time() - t0,
                    extra={"K": K, "total_windows": total})
    print(os.path.join(args.out, "drift.csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
