"""Named groups of checks with the one-rerun rule.

A group that reports a failure is run again once with a fresh seed derived
from the original; each failing report is replaced by its rerun, and only a
second failure is final.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Callable

from . import checks as C
from .stats import FAIL, INCONCLUSIVE, TestReport

SUITES = ("shapes", "lengths", "mixture", "dirichlet", "brownian", "ledgers", "all")
RERUN_OFFSET = 1_000_003


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    run: Callable[[int, int], list[TestReport]]   # (seed, n) -> reports


def derive_seed(seed: int, name: str) -> int:
    return (seed * RERUN_OFFSET + zlib.crc32(name.encode())) % (1 << 63)


def _listify(x):
    return x if isinstance(x, list) else [x]


def registry(alpha_list=(1.5,)) -> list[Check]:
    out: list[Check] = []

    def add(name, suite, fn):
        out.append(Check(name, suite, lambda seed, n, fn=fn: _listify(fn(seed, n))))

    for a in alpha_list:
        brownian = float(a) == 2.0
        # shapes
        for p in range(1, 6):
            add(f"shape-formula/{a}/{p}", "shapes", lambda s, n, a=a, p=p: C.check_shape_formula(a, p))
        algos = ["I", "MARCHAL"] if brownian else ["I", "II", "MARCHAL"]
        for algo in algos:
            add(f"shape-mc/{algo}/{a}", "shapes",
                lambda s, n, a=a, algo=algo: C.check_shape_frequencies(a, [3, 4, 5], algo, n, s))
        if not brownian:
            add(f"shape-2sample/I~II/{a}", "shapes",
                lambda s, n, a=a: C.check_shape_two_sample(a, 5, "I", "II", n, s))
        add(f"shape-2sample/I~NORMALIZED_I/{a}", "shapes",
            lambda s, n, a=a: C.check_shape_two_sample(a, 4, "I", "NORMALIZED_I", n, s))
        add(f"labelled-shapes/{a}", "shapes", lambda s, n, a=a: C.check_labelled_shapes(a, 4, n, s))
        # lengths
        add(f"lengths-given-shape/{a}/3", "lengths", lambda s, n, a=a: C.check_lengths_given_shape(a, 3, n, s))
        add(f"lengths-given-shape/{a}/1", "lengths",
            lambda s, n, a=a: C.check_lengths_given_shape(a, 1, max(n // 10, 100), s))
        add(f"normalized-length/{a}", "lengths",
            lambda s, n, a=a: C.check_normalized(a, 4, max(n // 2, 100), s))
        # mixture and moments
        add(f"total-length-mixture/{a}", "mixture", lambda s, n, a=a: C.check_total_length_mixture(a, 4, n, s))
        add(f"ml-moments/{a}", "mixture", lambda s, n, a=a: C.check_ml_moments(a, 6, n, s))
        add(f"chain-independence/{a}", "mixture", lambda s, n, a=a: C.check_chain_independence(a, 3, n, s))
        # ledgers
        if not brownian:
            add(f"ledgers/{a}", "ledgers", lambda s, n, a=a: C.check_ledgers(a, 10_000, s))
            add(f"edge-limit/{a}", "ledgers", lambda s, n, a=a: C.check_edge_limit(a, 1000, 10_000, s))
        add(f"nested/{a}", "ledgers", lambda s, n, a=a: C.check_nested(a, 30, s))

    # parameter-free groups
    add("gamma-ml/half", "dirichlet", lambda s, n: C.check_gamma_ml(0.5, 1.0, n, s))
    add("gamma-ml/chain", "dirichlet",
        lambda s, n: C.check_gamma_ml(1 / 3, 2 - 2 / 3, n, s, alpha=1.5, p=2))
    add("size-biased/1,1", "dirichlet", lambda s, n: C.check_size_biased((1.0, 1.0), n, s))
    add("size-biased/0.5,1,2", "dirichlet", lambda s, n: C.check_size_biased((0.5, 1.0, 2.0), n, s))
    add("decomposition/1,1,1", "dirichlet", lambda s, n: C.check_decomposition((1.0, 1.0, 1.0), 2, n, s))
    add("decomposition/0.5,2,1.5,1", "dirichlet",
        lambda s, n: C.check_decomposition((0.5, 2.0, 1.5, 1.0), 2, n, s))
    add("recursion-edge/1.5", "dirichlet", lambda s, n: C.check_recursion_edge(1.5, 2, 3, (2.0,), 1, n, s))
    add("recursion-edge/1.2", "dirichlet",
        lambda s, n: C.check_recursion_edge(1.2, 3, 5, (4.0, 5.0), 2, n, s))
    add("recursion-vertex/1.5/base", "dirichlet", lambda s, n: C.check_recursion_vertex(1.5, 1, 1, (), n, s))
    add("recursion-vertex/1.5", "dirichlet", lambda s, n: C.check_recursion_vertex(1.5, 2, 3, (1.0,), n, s))
    add("recursion-vertex/1.2", "dirichlet", lambda s, n: C.check_recursion_vertex(1.2, 3, 4, (9.0,), n, s))
    add("lengths-masses/2", "dirichlet", lambda s, n: C.check_lengths_masses((0.5, 0.5), n, s))
    add("lengths-masses/3", "dirichlet", lambda s, n: C.check_lengths_masses((0.5, 1.0, 1.5), n, s))
    add("brownian-reduction/backward", "brownian", lambda s, n: C.check_brownian_reduction(5, n, s))
    add("brownian-reduction/chain", "brownian",
        lambda s, n: C.check_brownian_reduction(5, n, s, route="chain"))
    add("brownian-transition", "brownian", lambda s, n: C.check_transition_density(1.5, n, s))
    add("aldous-first-cut", "brownian", lambda s, n: C.check_aldous_first_cut(n, s))
    add("aldous-equivalence", "brownian", lambda s, n: C.check_aldous_equivalence(4, max(n // 2, 100), s))
    add("kernel-calibration", "ledgers", lambda s, n: C.check_calibration(1000, 200, s))
    return out


def run_check(check: Check, seed: int, n: int) -> list[TestReport]:
    s = derive_seed(seed, check.name)
    first = check.run(s, n)
    if not any(r.verdict == FAIL for r in first):
        return first
    again = {r.name: r for r in check.run(s + RERUN_OFFSET, n)}
    out = []
    for r in first:
        if r.verdict == FAIL and r.name in again:
            rerun = again[r.name]
            rerun.rerun = True
            rerun.detail = dict(rerun.detail, first_seed=s, first_stat=r.stat, first_pvalue=r.pvalue)
            out.append(rerun)
        else:
            out.append(r)
    return out


def select(suite: str, alpha_list=(1.5,)) -> list[Check]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    checks = registry(alpha_list)
    return checks if suite == "all" else [c for c in checks if c.suite == suite]


def run_suite(suite: str, alpha_list=(1.5,), n: int = 10_000, seed: int = 0,
              progress: Callable[[TestReport], None] | None = None) -> list[TestReport]:
    reports = []
    for check in select(suite, alpha_list):
        for r in run_check(check, seed, n):
            reports.append(r)
            if progress is not None:
                progress(r)
    return reports


def summarize(reports: list[TestReport]) -> dict[str, int]:
    out = {"pass": 0, "fail": 0, "inconclusive": 0}
    for r in reports:
        out[r.verdict] = out.get(r.verdict, 0) + 1
    return out


def exit_code(reports: list[TestReport]) -> int:
    return 1 if any(r.verdict == FAIL for r in reports) else 0


__all__ = ["Check", "SUITES", "INCONCLUSIVE", "registry", "run_check", "run_suite", "select", "summarize",
           "exit_code", "derive_seed"]
