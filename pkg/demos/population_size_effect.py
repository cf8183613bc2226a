"""How population size changes the search's depth of descent.

Small populations skim over the layered structure; larger ones get pulled
into optimizing each level's hot region and visit far more levels.  This is
the core qualitative effect, shown here at toy scale in a few seconds.
"""

import numpy as np

from hottopic_ea.experiments import ExperimentConfig, run_sweep

cfg = ExperimentConfig(n=1000, alpha=0.25, beta=0.05, epsilon=0.05, L=20,
                       c=1.0, mu_grid=(2, 5, 10, 20, 50, 100), runs=5,
                       budget=50_000_000, master_seed=0, threads=4)
res = run_sweep(cfg, "mu")

print(f"{'mu':>5}  {'mean evals':>12}  {'mean levels visited':>20}")
for p in res.points:
    ev = np.mean(p.evaluations)
    vis = np.mean(p.visited_counts)
    bar = "#" * int(round(vis))
    print(f"{p.mu:>5}  {ev:>12.0f}  {vis:>8.1f} / {cfg.L}  {bar}")

print("\nRuntime grows with mu, and so does the number of levels the search")
print("engages with. At larger n the growth in runtime becomes dramatic.")
