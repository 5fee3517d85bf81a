"""Regenerate the golden example files under docs/golden.

Run from the repository root:  python3 scripts/make_golden.py
"""

import io
import sys
from pathlib import Path

from stabletree.chain import chain_values
from stabletree.io import dumps_distmatrix, dumps_json, dumps_newick
from stabletree.linebreaking import Algorithm, GrowthConfig, grow, write_trace_csv
from stabletree.rng import RngStream
from stabletree.verify.checks import check_shape_formula, check_size_biased
from stabletree.verify.stats import write_jsonl
from stabletree.cli import chain_csv

GOLDEN = Path(__file__).resolve().parent.parent / "docs" / "golden"
ALPHA, LEAVES, SEED = 1.5, 4, 7


def build() -> dict[str, str]:
    res = grow(GrowthConfig(ALPHA, LEAVES, Algorithm.I, seed=SEED, trace=True))
    trace = io.StringIO()
    write_trace_csv(res.trace, trace)
    reports = io.StringIO()
    write_jsonl([check_shape_formula(ALPHA, 3), check_size_biased((1.0, 1.0), 200, SEED)], reports)
    return {
        "tree.json": dumps_json(res.tree, alpha=ALPHA, seed=SEED),
        "tree.nwk": dumps_newick(res.tree),
        "tree.csv": dumps_distmatrix(res.tree),
        "trace.csv": trace.getvalue(),
        "chain.csv": chain_csv(chain_values(ALPHA, 5, RngStream(SEED))),
        "report.jsonl": reports.getvalue(),
    }


if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for name, text in build().items():
        (GOLDEN / name).write_text(text)
        print(f"wrote {GOLDEN / name}", file=sys.stderr)
