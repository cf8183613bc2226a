"""Quickstart: build an instance, run the (mu+1)-EA on it, inspect the result.

Everything is seeded; running this twice prints identical numbers.
"""

from hottopic_ea import EAConfig, HotTopicParams, generate_instance, run_ea_fast

# A small layered instance: n bit positions, L levels, each level watching a
# random quarter of the positions (alpha) with a sensitive core (beta).
params = HotTopicParams(n=1000, alpha=0.25, beta=0.05, epsilon=0.05, L=20, seed=7)
inst = generate_instance(params)
print(f"instance: n={params.n}, L={params.L}, |A_i|={inst.params.size_a}, "
      f"|B_i|={inst.params.size_b}")

# One run with a modest population. The run stops at the all-ones optimum or
# at the evaluation budget, whichever comes first.
cfg = EAConfig(mu=20, c=1.0, max_evaluations=5_000_000, master_seed=42,
               trace_stride=5000)
rec = run_ea_fast(cfg, inst)

print(f"evaluations: {rec.evaluations}")
print(f"optimum found: {not rec.censored} "
      f"(at evaluation {rec.optimum_evaluation})")
print(f"levels visited by the best individual: "
      f"{len(rec.visited_levels - {0})} of {params.L}")
for t in rec.trace[:5]:
    print(f"  round {t.round:>7}: best onemax {t.best_onemax}, "
          f"level {t.best_level}")
