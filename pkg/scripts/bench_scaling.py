"""Growth time and skeleton-point draw time over doubling tree sizes.

Writes a CSV (leaves, edges, grow_seconds, seconds_per_draw) to stdout.
"""

import argparse
import csv
import sys
import time

from stabletree.cli import log_fit, selection_timing
from stabletree.linebreaking import Algorithm, GrowthConfig, grow


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--start", type=int, default=1000)
    ap.add_argument("--doublings", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = [args.start * 2 ** k for k in range(args.doublings)]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["leaves", "edges", "grow_seconds", "seconds_per_draw"])
    rows = selection_timing(args.alpha, sizes, args.seed)
    for row in rows:
        t0 = time.perf_counter()
        grow(GrowthConfig(args.alpha, row["leaves"], Algorithm.I, seed=args.seed))
        w.writerow([row["leaves"], row["edges"], f"{time.perf_counter() - t0:.4f}", f"{row['seconds_per_draw']:.3e}"])
    print(log_fit(rows), file=sys.stderr)


if __name__ == "__main__":
    main()
