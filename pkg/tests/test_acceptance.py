"""The ten acceptance criteria at their stated sample sizes and tolerances.

Each criterion prints one PASS/FAIL line in the terminal summary. Statistical
criteria go through the same one-rerun rule as ``stabletree verify``.
"""

import math
import time

import numpy as np
import pytest
from mpmath import loggamma, mp, exp as mexp

from stabletree.cli import main, selection_timing, log_fit
from stabletree.verify import checks as C
from stabletree.verify.stats import PASS
from stabletree.verify.suites import Check, run_check, run_suite

from conftest import ACCEPTANCE

N = 100_000
SEED = 2024

pytestmark = pytest.mark.slow


def record(k: int, title: str, reports, started: float, budget: float | None = None, extra: str = ""):
    reports = reports if isinstance(reports, list) else [reports]
    bad = [r for r in reports if r.verdict != PASS]
    elapsed = time.perf_counter() - started
    ok = not bad and (budget is None or elapsed < budget)
    reruns = sum(r.rerun for r in reports)
    note = f"{len(reports)} reports"
    if reruns:
        note += f", {reruns} rerun"
    if bad:
        note += "; failing: " + ", ".join(r.name for r in bad[:3])
    if extra:
        note += "; " + extra
    limit = f"/{budget:.0f}s" if budget else ""
    ACCEPTANCE[k] = f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title} ({note}; {elapsed:.0f}s{limit})"
    return ok, bad


def seeded(name, fn, n=N):
    def run(s, n_):
        out = fn(s, n_)
        return out if isinstance(out, list) else [out]
    return run_check(Check(name, "acceptance", run), SEED, n)


def test_criterion_01_shape_law_exact():
    t0 = time.perf_counter()
    reports = [C.check_shape_formula(a, p) for a in (1.2, 1.5, 1.8) for p in range(1, 6)]
    star = C.enumerate_shape_law(1.5, 3).probs["((()()()))"]
    ok, bad = record(1, "shape law exact, alpha in {1.2,1.5,1.8}, p<=5", reports, t0, 60,
                     f"P(star|p=3)={float(star)}")
    assert float(star) == 0.25
    assert ok, bad


def test_criterion_02_shape_law_monte_carlo():
    t0 = time.perf_counter()
    reports = []
    for algo in ("I", "II"):
        reports += seeded(f"acc-shape-mc-{algo}", lambda s, n, algo=algo: C.check_shape_frequencies(1.5, [3, 4, 5], algo, n, s))
    ok, bad = record(2, "shape frequencies, algorithms I and II, p in {3,4,5}, n=1e5", reports, t0, 600)
    assert ok, bad


def _ml_oracle(theta, beta, k):
    mp.dps = 30
    return float(mexp(loggamma(theta + 1) + loggamma(theta / beta + k + 1)
                      - loggamma(theta / beta + 1) - loggamma(theta + k * beta + 1)))


def test_criterion_03_ml_moments():
    t0 = time.perf_counter()
    target = _ml_oracle(1 - 1 / 1.5, 1 / 3, 1)
    assert abs(target - 1.97835) < 2e-5
    reports = []
    for a in (1.5, 2.0):
        reports += seeded(f"acc-ml-{a}", lambda s, n, a=a: C.check_ml_moments(a, 6, n, s))
    first = next(r for r in reports if r.name == "ml-moment[alpha=1.5,p=1,k=1]")
    assert first.detail["target"] == pytest.approx(target, rel=1e-12)
    ok, bad = record(3, "ML moments, k<=3, p<=6, alpha in {1.5,2}, n=1e5", reports, t0, 300,
                     f"E[M_1]={target:.6f}, empirical {first.detail['empirical']:.6f}")
    assert ok, bad


def test_criterion_04_brownian_reduction():
    t0 = time.perf_counter()
    reports = seeded("acc-brownian", lambda s, n: C.check_brownian_reduction(5, n, s, route="chain"))
    reports += seeded("acc-brownian-backward", lambda s, n: C.check_brownian_reduction(5, n, s))
    reports += seeded("acc-aldous", lambda s, n: C.check_aldous_equivalence(4, n, s))
    ok, bad = record(4, "Brownian increments Exp(1) and algorithm I ~ Aldous at t dt/2, n=1e5", reports, t0, 300)
    assert ok, bad


def test_criterion_05_total_length_mixture():
    t0 = time.perf_counter()
    reports = seeded("acc-mixture", lambda s, n: C.check_total_length_mixture(1.5, 4, n, s))
    ok, bad = record(5, "total length vs mixture, alpha=1.5, p=4, n=1e5", reports, t0, 300)
    assert ok, bad


def test_criterion_06_lengths_given_shape():
    t0 = time.perf_counter()
    reports = seeded("acc-lengths", lambda s, n: C.check_lengths_given_shape(1.5, 3, n, s))
    assert len(reports) == 2
    ok, bad = record(6, "lengths given shape, alpha=1.5, p=3, both shapes", reports, t0, 600)
    assert ok, bad


def test_criterion_07_exact_ledgers():
    t0 = time.perf_counter()
    reports = C.check_ledgers(1.5, 10_000, SEED)
    worst = max(r.stat for r in reports)
    ok, bad = record(7, "weight ledger and degree identity every round, p=1e4", reports, t0, 60,
                     f"worst relative error {worst:.2e}")
    assert ok, bad


def test_criterion_08_dirichlet_suite():
    t0 = time.perf_counter()
    reports = run_suite("dirichlet", (1.5,), N, SEED)
    ok, bad = record(8, "Dirichlet identity suite, n=1e5 per test", reports, t0, 600)
    assert ok, bad


def test_criterion_09_edge_limit():
    t0 = time.perf_counter()
    r = C.check_edge_limit(1.5, 1000, 10_000, SEED)
    ok, bad = record(9, "running average of L_p/M_p over [1e3,1e4] within 1% of 0.5", r, t0, 120,
                     f"average {r.detail['average']:.5f} over {r.n} runs; "
                     f"first run alone {r.detail['per_run'][0]:.5f}")
    assert ok, bad


def test_criterion_10_performance(tmp_path, capsys):
    import json
    t0 = time.perf_counter()
    out = tmp_path / "bench.json"
    code = main(["bench", "--alpha", "1.5", "--leaves", "1000000", "--seed", str(SEED), "--out", str(out),
                 "--doubling", "10000,20000,40000,80000,160000"])
    capsys.readouterr()
    assert code == 0
    doc = json.loads(out.read_text())
    inv = doc["invariants"]
    assert inv["validate"] and inv["degree_identity_rel"] <= 1e-10
    assert inv["fenwick_drift"] <= 1e-9 * 1e6
    fit = doc["selection_fit"]
    from stabletree.verify.stats import TestReport
    r = TestReport("bench-1e6", "exact", 0.0, None, 1, SEED, threshold=0.0)
    record(10, "bench p=1e6 with invariants intact", [r], t0, None,
           f"{doc['wall_seconds']:.1f}s growth, {doc['peak_rss_mb']:.0f} MB, "
           f"selection {fit['seconds_per_doubling'] * 1e9:.0f} ns per doubling "
           f"(power-law exponent {fit['power_law_exponent']:.2f}, soft gate)")
