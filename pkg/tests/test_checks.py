"""Each check at small sample sizes, plus negative controls that must fail."""

import numpy as np
import pytest

from stabletree import linebreaking
from stabletree.chain import chain_values, sample_chain_matrix
from stabletree.rng import RngStream
from stabletree.verify import checks as C
from stabletree.verify.stats import FAIL, PASS
from stabletree.verify.suites import SUITES, derive_seed, registry, run_check, run_suite, select, summarize


def verdicts(reports):
    reports = reports if isinstance(reports, list) else [reports]
    return [r.verdict for r in reports]


def test_registry_inventory():
    names = [c.name for c in registry((1.5,))]
    assert len(names) == len(set(names)) >= 20
    assert {c.suite for c in registry((1.5,))} == set(SUITES) - {"all"}
    with pytest.raises(ValueError):
        select("nope")
    # alpha = 2 drops the checks that need a vertex branch
    assert "shape-mc/II/2.0" not in [c.name for c in registry((2.0,))]


def test_derive_seed_is_stable():
    assert derive_seed(0, "a") == derive_seed(0, "a")
    assert derive_seed(0, "a") != derive_seed(0, "b")
    assert derive_seed(0, "a") != derive_seed(1, "a")


@pytest.mark.parametrize("alpha,p", [(1.5, 3), (1.8, 4), (1.2, 5), (2.0, 4)])
def test_shape_formula_exact(alpha, p):
    r = C.check_shape_formula(alpha, p)
    assert r.verdict == PASS and r.stat <= 1e-10


def test_suite_reports_are_deterministic():
    a = [r.to_json() for r in run_suite("dirichlet", (1.5,), 300, 5)]
    b = [r.to_json() for r in run_suite("dirichlet", (1.5,), 300, 5)]
    assert a == b


def test_small_brownian_and_dirichlet_suites_pass():
    for suite in ("brownian", "dirichlet"):
        counts = summarize(run_suite(suite, (1.5,), 2000, 1))
        assert counts["fail"] == 0, suite


def test_rerun_replaces_only_failures():
    from stabletree.verify.stats import TestReport
    from stabletree.verify.suites import Check

    calls = []

    def run(seed, n):
        calls.append(seed)
        bad = len(calls) == 1
        return [TestReport("ok", "exact", 0.0, None, 1, seed, threshold=1.0),
                TestReport("flaky", "exact", 2.0 if bad else 0.0, None, 1, seed, threshold=1.0)]

    out = run_check(Check("x", "ledgers", run), 0, 10)
    assert len(calls) == 2
    assert [r.verdict for r in out] == [PASS, PASS]
    assert out[0].rerun is False and out[1].rerun is True
    assert out[1].detail["first_stat"] == 2.0


def test_mixture_and_moments_small():
    assert FAIL not in verdicts(C.check_total_length_mixture(1.5, 3, 3000, 2))
    assert FAIL not in verdicts(C.check_ml_moments(1.5, 3, 5000, 3))
    assert FAIL not in verdicts(C.check_chain_independence(1.5, 3, 5000, 4))


def test_lengths_small():
    assert FAIL not in verdicts(C.check_lengths_given_shape(1.5, 3, 3000, 5))
    assert FAIL not in verdicts(C.check_normalized(1.5, 4, 3000, 6))


def test_ledgers_and_nesting():
    assert verdicts(C.check_ledgers(1.5, 2000, 0)) == [PASS] * 3
    assert C.check_nested(1.3, 25, 0).verdict == PASS


def test_brownian_path_offline():
    values = chain_values(2.0, 5000, RngStream(8))
    assert verdicts(C.check_brownian_path(values, 8)) == [PASS, PASS]


# ---------------------------------------------------------- negative controls
def test_wrong_alpha_shape_table_fails():
    counts = C.shape_counts(1.5, [4], "MARCHAL", 20_000, 0)[4]
    assert C.shape_report("ctl", 1.5, 4, counts, 0).verdict == PASS
    assert C.shape_report("ctl", 1.8, 4, counts, 0).verdict == FAIL


def test_non_brownian_chain_fails_reduction():
    mat = sample_chain_matrix(1.5, 4, 5000, RngStream(1))
    assert FAIL in verdicts(C.check_brownian_reduction(4, 5000, 1, mat=mat))
    assert FAIL in verdicts(C.check_brownian_path(chain_values(1.5, 5000, RngStream(2))))


def test_fresh_beta_chain_fails_moments(monkeypatch):
    # stepping forward with a Beta factor independent of M_p gives the wrong law
    from stabletree.distributions import chain_beta_params, sample_beta, sample_m1
    from stabletree.params import AlphaParam

    def wrong(alpha, p_max, n_rep, rng, n_trunc=None, tail=True):
        ap = alpha if isinstance(alpha, AlphaParam) else AlphaParam(float(alpha))
        out = np.empty((n_rep, p_max))
        out[:, 0] = sample_m1(ap, 1000, rng, size=n_rep)
        for p in range(1, p_max):
            a, b = chain_beta_params(ap, p)
            out[:, p] = out[:, p - 1] / sample_beta(a, b, rng, size=n_rep, strict=True)
        return out
    monkeypatch.setattr(C, "sample_chain_matrix", wrong)
    assert FAIL in verdicts(C.check_ml_moments(1.5, 4, 20_000, 0))


def test_full_glue_fraction_fails_lengths(monkeypatch):
    # gluing the whole increment (B = 1) is only right at alpha = 2
    monkeypatch.setattr(linebreaking, "_block_glue_fractions", lambda ap, n, g: np.ones(n))
    assert FAIL in verdicts(C.check_lengths_given_shape(1.5, 3, 4000, 0))
