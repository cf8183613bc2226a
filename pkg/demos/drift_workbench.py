"""Instrumented fixed-level run: family forest and rank-drift statistics.

Freezes the search at one level (the fitness becomes linear in the hot region
plus the remainder) and logs every birth and death.  From that log we read
off the ancestry forest of high-rank individuals and the Z-series, the
OneMax value of the last individual deleted at each rank.
"""

import numpy as np

from hottopic_ea.analysis import (
    build_family_forest,
    depth_profile,
    extract_z_series,
    truncated_drift,
)
from hottopic_ea.engine import EAConfig, run_ea
from hottopic_ea.hottopic import HotTopicParams, generate_instance

inst = generate_instance(HotTopicParams(n=800, alpha=0.25, beta=0.05,
                                        epsilon=0.05, L=5, seed=3))
cfg = EAConfig(mu=50, c=1.0, mode="aux_linear", aux_level=0,
               max_evaluations=40_000, stop_at_optimum=False,
               master_seed=1, log_events=True)
rec = run_ea(cfg, inst)
print(f"run: {rec.evaluations} evaluations, {rec.rounds} rounds logged")

ranks = [rec.events.rank[k] for k in range(len(rec.events))]
i = int(np.percentile(ranks, 99))
forest = build_family_forest(rec, i)
prof = depth_profile(forest)
print(f"\nfamily forest at rank threshold {i}: {len(forest)} vertices, "
      f"{len(forest.roots)} roots, max depth {len(prof) - 1}")
for d, count in enumerate(prof[:8]):
    print(f"  depth {d}: {count}")
if len(prof) > 8:
    print(f"  ... {int(prof[8:].sum())} deeper vertices")

z = extract_z_series(rec)
print(f"\nZ-series covers ranks {z.i_min}..{z.i_max}")
est = truncated_drift(z, K=5, mu=cfg.mu)
print(f"truncated drift over K=5 rank windows: "
      f"{est.mean:+.3f} +- {est.stderr:.3f} ({est.count} windows)")
print("\n(Negative drift here is the mechanism behind the slowdown; at this")
print("toy scale the estimate is usually still positive or near zero.)")
