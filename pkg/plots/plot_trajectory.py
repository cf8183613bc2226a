"""Trajectory figure: mean best-density over rounds with min/max envelope.

Usage: python3 plot_trajectory.py --in trajectory_envelope.csv [...] --out fig.png

Each input CSV becomes one line + shaded band; statistics are taken from the
envelope columns as written by the experiment driver, nothing is recomputed.
"""

import argparse
import os

import matplotlib.pyplot as plt

from common import FIGSIZE, load_rows, save


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    metavar="CSV", help="trajectory_envelope.v1 files")
    ap.add_argument("--out", required=True, metavar="IMG")
    args = ap.parse_args(argv)

    fig, ax = plt.subplots(figsize=FIGSIZE)
    for path in args.inputs:
        rows = load_rows(path, "trajectory_envelope.v1")
        rounds = [int(r["round"]) for r in rows]
        mean = [float(r["density_mean"]) for r in rows]
        lo = [float(r["density_min"]) for r in rows]
        hi = [float(r["density_max"]) for r in rows]
        label = os.path.basename(os.path.dirname(os.path.abspath(path))) or path
        (line,) = ax.plot(rounds, mean, label=label)
        ax.fill_between(rounds, lo, hi, alpha=0.25, color=line.get_color())
    ax.set_xlabel("round")
    ax.set_ylabel("zero-bit density of best individual")
    ax.set_title("Best-individual trajectory (mean, min/max over runs)")
    if len(args.inputs) > 1:
        ax.legend()
    save(fig, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
