"""Sweep figure: mean runtime per grid point with standard-deviation error bars.

Usage: python3 plot_sweep.py --in sweep_mu.csv [sweep2.csv ...] --out fig.png
       [--y visited] [--label NAME ...]

Reads per-run rows (sweep.v1) and derives mean and sample standard deviation
from them; these error bars are the one statistic intentionally recomputed
from rows.  Multiple inputs become multiple series (e.g. two level counts).
The x axis is whichever of mu or c varies in the first input.
"""

import argparse
import math
import os

import matplotlib.pyplot as plt

from common import FIGSIZE, load_rows, save


def series(rows, y_field):
    """Per-point (x-ish key, mean, sample stddev) triples from raw rows."""
    by_point = {}
    for r in rows:
        key = (int(r["point_index"]), int(r["mu"]), float(r["c"]))
        by_point.setdefault(key, []).append(float(r[y_field]))
    out = []
    for (idx, mu, c), vals in sorted(by_point.items()):
        mean = sum(vals) / len(vals)
        if len(vals) > 1:
            std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (len(vals) - 1))
        else:
            std = 0.0
        out.append((mu, c, mean, std))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    metavar="CSV", help="sweep.v1 files")
    ap.add_argument("--out", required=True, metavar="IMG")
    ap.add_argument("--y", choices=("evaluations", "visited_levels"),
                    default="evaluations", help="row field to aggregate")
    ap.add_argument("--label", nargs="*", default=None,
                    help="series labels, one per input")
    args = ap.parse_args(argv)

    fig, ax = plt.subplots(figsize=FIGSIZE)
    axis = None
    for k, path in enumerate(args.inputs):
        rows = load_rows(path, "sweep.v1")
        pts = series(rows, args.y)
        if axis is None:
            mus = {p[0] for p in pts}
            axis = "mu" if len(mus) > 1 else "c"
        xs = [p[0] if axis == "mu" else p[1] for p in pts]
        means = [p[2] for p in pts]
        stds = [p[3] for p in pts]
        label = (args.label[k] if args.label and k < len(args.label)
                 else os.path.basename(path))
        ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, label=label)
    ax.set_xlabel(axis)
    ylabel = "evaluations" if args.y == "evaluations" else "levels visited"
    ax.set_ylabel(f"mean {ylabel}")
    if axis == "mu":
        ax.set_xscale("log")
    if args.y == "evaluations":
        ax.set_yscale("log")
    ax.set_title(f"{ylabel} vs {axis} (error bars: sample std dev)")
    if len(args.inputs) > 1:
        ax.legend()
    save(fig, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
