"""Experiment drivers: trajectories, parameter sweeps, min-mu search, CSV output.

Reproducibility contract: every run's seed is mix64(master_seed, point_index,
run_index), recorded in its CSV row, so any single run can be re-executed in
isolation.  Results are collected into (point, run) order before writing, so
CSV bytes are identical for any worker count.

CSV files carry a version header comment (``# schema: sweep.v1`` etc.); a JSON
metadata file records the fully resolved configuration, tool version and wall
time.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .engine import EAConfig
from .fastengine import run_ea_fast
from .hottopic import HotTopicInstance, HotTopicParams, generate_instance
from .rng import mix64

# stream tag under which the instance seed is derived from the master seed
INSTANCE_SEED_TAG = 0x696E7374  # "inst"

PRESETS = {
    "desk": {"n": 3000, "L": 50},
    "paper": {"n": 10000, "L": 100},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration for one experiment invocation."""

    n: int = 3000
    alpha: float = 0.25
    beta: float = 0.05
    epsilon: float = 0.05
    L: int = 50
    instance_seed: Optional[int] = None   # default: mix64(master_seed, tag)
    mu: int = 50
    c: float = 1.0
    mu_grid: tuple = ()
    c_grid: tuple = ()
    runs: int = 10
    budget: int = 100_000_000
    master_seed: int = 0
    threads: int = 1
    trace_stride: int = 1000
    mu_cap: int = 1024

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        for name in ("mu_grid", "c_grid"):
            grid = getattr(self, name)
            if grid and list(grid) != sorted(set(grid)):
                raise ValueError(f"{name} must be non-empty, strictly increasing")

    def resolved_instance_seed(self) -> int:
        if self.instance_seed is not None:
            return self.instance_seed
        return mix64(self.master_seed, INSTANCE_SEED_TAG)

    def instance_params(self) -> HotTopicParams:
        return HotTopicParams(n=self.n, alpha=self.alpha, beta=self.beta,
                              epsilon=self.epsilon, L=self.L,
                              seed=self.resolved_instance_seed())


_CONFIG_TYPES = {
    "n": int, "alpha": float, "beta": float, "epsilon": float, "L": int,
    "instance_seed": int, "mu": int, "c": float, "runs": int, "budget": int,
    "master_seed": int, "threads": int, "trace_stride": int, "mu_cap": int,
}
_GRID_KEYS = {"mu_grid": int, "c_grid": float}


def parse_config_file(path: str) -> dict:
    """Flat key=value config file; '#' starts a comment; unknown keys error."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in _CONFIG_TYPES:
                out[key] = _CONFIG_TYPES[key](val)
            elif key in _GRID_KEYS:
                out[key] = tuple(_GRID_KEYS[key](v) for v in val.split(",") if v.strip())
            elif key == "preset":
                if val not in PRESETS:
                    raise ValueError(f"{path}:{lineno}: unknown preset {val!r}")
                out.update(PRESETS[val])
            else:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return out


def build_config(file_values: Optional[dict] = None, **overrides) -> ExperimentConfig:
    """Config from file values with explicit overrides winning."""
    values = dict(file_values or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# Worker-side execution (instance cached per process)

_INSTANCE_CACHE: dict[tuple, HotTopicInstance] = {}


def _instance_for(params: HotTopicParams) -> HotTopicInstance:
    key = dataclasses.astuple(params)
    inst = _INSTANCE_CACHE.get(key)
    if inst is None:
        if len(_INSTANCE_CACHE) > 4:
            _INSTANCE_CACHE.clear()
        inst = _INSTANCE_CACHE[key] = generate_instance(params)
    return inst


def _one_run(task: tuple) -> tuple:
    """Execute one seeded run; returns a plain result tuple."""
    params_tuple, mu, c, seed, budget, trace_stride, mode, aux_level = task
    params = HotTopicParams(*params_tuple)
    inst = _instance_for(params)
    cfg = EAConfig(mu=mu, c=c, mode=mode, aux_level=aux_level,
                   max_evaluations=budget, master_seed=seed,
                   trace_stride=trace_stride)
    rec = run_ea_fast(cfg, inst)
    visited = sorted(rec.visited_levels - {0})
    trace = [(t.round, t.evaluations, t.best_onemax, t.best_level) for t in rec.trace]
    return (rec.evaluations, rec.optimum_evaluation, rec.censored, visited, trace)


def _execute(tasks: list[tuple], threads: int) -> list[tuple]:
    """Run tasks, returning results in task order regardless of scheduling."""
    if threads <= 1 or len(tasks) <= 1:
        return [_one_run(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_one_run, tasks, chunksize=1))


# ---------------------------------------------------------------------------
# Output helpers


def _write_csv(path: str, schema: str, header: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema: {schema}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def _write_metadata(out_dir: str, command: str, cfg: ExperimentConfig,
                    wall_time: float, extra: Optional[dict] = None) -> str:
    meta = {
        "command": command,
        "tool_version": __version__,
        "wall_time_seconds": wall_time,
        "config": dataclasses.asdict(cfg),
        "resolved_instance_seed": cfg.resolved_instance_seed(),
    }
    if extra:
        meta.update(extra)
    path = os.path.join(out_dir, f"{command}_metadata.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Trajectories


def run_trajectory(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Traced runs at a single (mu, c) point.

    Writes trajectory.csv (per-run strided rows: zero-bit density of the best
    individual, fraction of levels remaining, fitness triple) and
    trajectory_envelope.csv (min/mean/max over runs on the union round grid,
    forward-filling each run's last value).
    """
    t0 = time.time()
    os.makedirs(out_dir, exist_ok=True)
    stride = max(cfg.trace_stride, 1)
    params = cfg.instance_params()
    pt = dataclasses.astuple(params)
    tasks = []
    seeds = []
    for r in range(cfg.runs):
        seed = mix64(cfg.master_seed, 0, r)
        seeds.append(seed)
        tasks.append((pt, cfg.mu, cfg.c, seed, cfg.budget, stride, "hottopic", 0))
    results = _execute(tasks, cfg.threads)

    n, L = cfg.n, cfg.L
    rows = []
    per_run_curves = []
    for r, (evals, opt_eval, censored, visited, trace) in enumerate(results):
        curve = []
        for rnd, ev, om, lev in trace:
            dens = (n - om) / n
            rows.append(",".join(map(_fmt, [
                r, seeds[r], rnd, ev, dens, (L - lev) / L, lev, int(censored)])))
            curve.append((rnd, dens, lev))
        per_run_curves.append(curve)
    _write_csv(os.path.join(out_dir, "trajectory.csv"), "trajectory.v1",
               "run,seed,round,evaluations,best_density,remaining_level_frac,level,censored",
               rows)

    grid = sorted({rnd for curve in per_run_curves for rnd, _, _ in curve})
    env_rows = []
    idx = [0] * len(per_run_curves)
    last = [(curve[0][1], curve[0][2]) if curve else (1.0, 0) for curve in per_run_curves]
    for rnd in grid:
        ds, ls = [], []
        for k, curve in enumerate(per_run_curves):
            while idx[k] < len(curve) and curve[idx[k]][0] <= rnd:
                last[k] = (curve[idx[k]][1], curve[idx[k]][2])
                idx[k] += 1
            ds.append(last[k][0])
            ls.append((L - last[k][1]) / L)
        env_rows.append(",".join(map(_fmt, [
            rnd, min(ds), sum(ds) / len(ds), max(ds),
            min(ls), sum(ls) / len(ls), max(ls)])))
    _write_csv(os.path.join(out_dir, "trajectory_envelope.csv"), "trajectory_envelope.v1",
               "round,density_min,density_mean,density_max,"
               "remaining_min,remaining_mean,remaining_max", env_rows)
    _write_metadata(out_dir, "trajectory", cfg, time.time() - t0)
    return [os.path.join(out_dir, "trajectory.csv"),
            os.path.join(out_dir, "trajectory_envelope.csv")]


# ---------------------------------------------------------------------------
# Sweeps


@dataclass
class SweepPoint:
    point_index: int
    mu: int
    c: float
    evaluations: list
    censored: list
    visited_counts: list
    seeds: list


@dataclass
class SweepResult:
    axis: str
    points: list


def run_sweep(cfg: ExperimentConfig, axis: str,
              out_dir: Optional[str] = None,
              file_prefix: Optional[str] = None) -> SweepResult:
    """Full factorial grid x runs sweep over mu or c at desk or paper scale."""
    if axis not in ("mu", "c"):
        raise ValueError("axis must be 'mu' or 'c'")
    grid = cfg.mu_grid if axis == "mu" else cfg.c_grid
    if not grid:
        raise ValueError(f"{axis}_grid is empty")
    t0 = time.time()
    params = cfg.instance_params()
    pt = dataclasses.astuple(params)
    tasks, seeds = [], []
    for p_idx, g in enumerate(grid):
        mu = g if axis == "mu" else cfg.mu
        c = cfg.c if axis == "mu" else g
        for r in range(cfg.runs):
            seed = mix64(cfg.master_seed, p_idx, r)
            seeds.append(seed)
            tasks.append((pt, mu, float(c), seed, cfg.budget, 0, "hottopic", 0))
    results = _execute(tasks, cfg.threads)

    points = []
    k = 0
    for p_idx, g in enumerate(grid):
        mu = g if axis == "mu" else cfg.mu
        c = cfg.c if axis == "mu" else g
        pt_res = SweepPoint(p_idx, mu, float(c), [], [], [], [])
        for r in range(cfg.runs):
            evals, opt_eval, censored, visited, _ = results[k]
            pt_res.evaluations.append(evals)
            pt_res.censored.append(bool(censored))
            pt_res.visited_counts.append(len(visited))
            pt_res.seeds.append(seeds[k])
            k += 1
        points.append(pt_res)
    result = SweepResult(axis=axis, points=points)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        prefix = file_prefix or f"sweep_{axis}"
        rows = []
        for p in points:
            for r in range(cfg.runs):
                rows.append(",".join(map(_fmt, [
                    p.point_index, p.mu, p.c, r, p.seeds[r], p.evaluations[r],
                    int(p.censored[r]), p.visited_counts[r]])))
        _write_csv(os.path.join(out_dir, f"{prefix}.csv"), "sweep.v1",
                   "point_index,mu,c,run_index,seed,evaluations,censored,visited_levels",
                   rows)
        srows = []
        for p in points:
            ev = np.asarray(p.evaluations, dtype=np.float64)
            vc = np.asarray(p.visited_counts, dtype=np.float64)
            srows.append(",".join(map(_fmt, [
                p.point_index, p.mu, p.c, len(ev), int(sum(p.censored)),
                float(ev.mean()), float(ev.std(ddof=1)) if len(ev) > 1 else 0.0,
                int(ev.min()), int(ev.max()),
                float(vc.mean()), float(vc.std(ddof=1)) if len(vc) > 1 else 0.0])))
        _write_csv(os.path.join(out_dir, f"{prefix}_summary.csv"), "sweep_summary.v1",
                   "point_index,mu,c,runs,censored_runs,runtime_mean,runtime_std,"
                   "runtime_min,runtime_max,visited_mean,visited_std", srows)
        _write_metadata(out_dir, prefix, cfg, time.time() - t0)
    return result


# ---------------------------------------------------------------------------
# Minimal population size search


def _full_visit_successes(cfg: ExperimentConfig, c: float, mu: int,
                          c_idx: int, attempt: int) -> int:
    """Number of runs (out of cfg.runs) whose best visits every level."""
    params = cfg.instance_params()
    pt = dataclasses.astuple(params)
    tasks = [(pt, mu, float(c),
              mix64(cfg.master_seed, c_idx, mu, r, attempt),
              cfg.budget, 0, "hottopic", 0)
             for r in range(cfg.runs)]
    results = _execute(tasks, cfg.threads)
    full = 0
    for _, _, _, visited, _ in results:
        if len(visited) == cfg.L:
            full += 1
    return full


def min_mu_search(cfg: ExperimentConfig, out_dir: Optional[str] = None,
                  need: Optional[int] = None) -> list[tuple[float, Optional[int]]]:
    """Smallest mu per c whose runs visit all levels in >= need of cfg.runs runs.

    Doubling then bisection over the success predicate.  A bisection
    observation contradicting monotonicity is re-sampled once with fresh
    seeds; if it persists, it is resolved conservatively upward (treated as a
    failure, pushing the reported minimum up).  Returns (c, min_mu) pairs with
    None meaning no success up to cfg.mu_cap.
    """
    if not cfg.c_grid:
        raise ValueError("c_grid is empty")
    need = (cfg.runs + 1) // 2 if need is None else need
    t0 = time.time()
    results: list[tuple[float, Optional[int]]] = []
    for c_idx, c in enumerate(cfg.c_grid):
        def success(mu: int, attempt: int = 0) -> bool:
            return _full_visit_successes(cfg, c, mu, c_idx, attempt) >= need

        mu = 1
        last_fail = 0
        found = None
        while mu <= cfg.mu_cap:
            if success(mu):
                found = mu
                break
            last_fail = mu
            mu *= 2
        if found is None:
            results.append((float(c), None))
            continue
        lo, hi = last_fail, found  # success at hi, failure at lo (or lo == 0)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if success(mid):
                hi = mid
            else:
                lo = mid
        # guard against non-monotone noise at the boundary: re-test hi once
        if not success(hi, attempt=1):
            ok2 = success(hi, attempt=2)
            if not ok2:
                # resolved conservatively upward: scan up to the doubling point
                probe = hi + 1
                while probe <= found and not success(probe, attempt=1):
                    probe += 1
                hi = probe if probe <= found else found
        results.append((float(c), hi))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        rows = [",".join(map(_fmt, [i, c, -1 if m is None else m,
                                    int(m is None), cfg.mu_cap]))
                for i, (c, m) in enumerate(results)]
        _write_csv(os.path.join(out_dir, "minmu.csv"), "minmu.v1",
                   "c_index,c,min_mu,capped,mu_cap", rows)
        _write_metadata(out_dir, "minmu", cfg, time.time() - t0,
                        extra={"need": need})
    return results
