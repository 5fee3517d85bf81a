"""Trajectory of L_p / M_p for one or more runs, as plot-ready CSV (run, p, ratio)."""

import argparse
import csv
import sys

from stabletree.linebreaking import Algorithm, GrowthConfig, grow
from stabletree.rng import RngStream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--leaves", type=int, default=10_000)
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--every", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["run", "p", "ratio"])
    for r in range(args.runs):
        def emit(p, tree, m, r=r):
            if p % args.every == 0:
                w.writerow([r, p, repr(tree.total_length / m)])
        grow(GrowthConfig(args.alpha, args.leaves, Algorithm.I), RngStream(args.seed, r), callback=emit)


if __name__ == "__main__":
    main()
