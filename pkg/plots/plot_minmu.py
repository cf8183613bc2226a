"""Minimal-population figure: smallest successful mu per mutation parameter c.

Usage: python3 plot_minmu.py --in minmu.csv [...] --out fig.png

Step-plus-scatter over the c grid from minmu.v1 rows.  Capped entries
(min_mu = -1: no success up to the cap) are drawn as open markers at the cap.
"""

import argparse
import os

import matplotlib.pyplot as plt

from common import FIGSIZE, load_rows, save


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    metavar="CSV", help="minmu.v1 files")
    ap.add_argument("--out", required=True, metavar="IMG")
    args = ap.parse_args(argv)

    fig, ax = plt.subplots(figsize=FIGSIZE)
    for path in args.inputs:
        rows = load_rows(path, "minmu.v1")
        found = [(float(r["c"]), int(r["min_mu"])) for r in rows
                 if int(r["capped"]) == 0]
        capped = [(float(r["c"]), int(r["mu_cap"])) for r in rows
                  if int(r["capped"]) == 1]
        label = os.path.basename(path)
        if found:
            cs, mus = zip(*sorted(found))
            ax.step(cs, mus, where="mid", marker="o", label=label)
        if capped:
            cs, caps = zip(*sorted(capped))
            ax.scatter(cs, caps, facecolors="none", edgecolors="tab:red",
                       marker="^", label=f"{label} (capped)" if found else label)
    ax.set_xlabel("c")
    ax.set_ylabel("smallest successful mu")
    ax.set_yscale("log")
    ax.set_title("Minimal population size for full level descent")
    if len(args.inputs) > 1:
        ax.legend()
    save(fig, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
