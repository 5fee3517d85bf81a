"""Statistical kernel and the report record shared by every check."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

SIGNIFICANCE = float(os.environ.get("STABLETREE_SIGNIFICANCE", "0.01"))
Z_LIMIT = 5.0
MIN_SAMPLES = 20
MIN_EXPECTED = 5.0

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
KINDS = ("KS", "chi-square", "moment-z", "exact")


@dataclass
class TestReport:
    """One verdict. ``threshold`` is the level for p-value tests, the z bound
    for moment tests and the relative tolerance for exact comparisons."""

    __test__ = False  # not a pytest class

    name: str
    kind: str
    stat: float
    pvalue: float | None
    n: int
    seed: int | None
    verdict: str = ""
    threshold: float = SIGNIFICANCE
    rerun: bool = False
    detail: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if not self.verdict:
            self.verdict = decide(self.kind, self.stat, self.pvalue, self.threshold, self.n)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(_clean(d), sort_keys=False, allow_nan=False)

    def line(self) -> str:
        pv = "-" if self.pvalue is None else f"{self.pvalue:.4g}"
        tag = " (rerun)" if self.rerun else ""
        return f"{self.verdict.upper():12s} {self.name}: {self.kind} stat={self.stat:.4g} p={pv} n={self.n}{tag}"


def _clean(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


def decide(kind: str, stat: float, pvalue: float | None, threshold: float, n: int) -> str:
    if kind != "exact" and n < MIN_SAMPLES:
        return INCONCLUSIVE
    if kind in ("KS", "chi-square"):
        return PASS if pvalue is not None and pvalue > threshold else FAIL
    if kind == "moment-z":
        return PASS if abs(stat) <= threshold else FAIL
    return PASS if stat <= threshold else FAIL


def write_jsonl(reports, fh) -> None:
    for r in reports:
        fh.write(r.to_json() + "\n")


# ------------------------------------------------------------------ kernel
def ks_two_sample(x, y) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    res = stats.ks_2samp(x, y, method="asymp" if min(len(x), len(y)) > 10_000 else "auto")
    return float(res.statistic), float(res.pvalue)


def ks_vs_cdf(x, cdf) -> tuple[float, float]:
    res = stats.kstest(np.asarray(x, dtype=float), cdf)
    return float(res.statistic), float(res.pvalue)


def pool_bins(observed, expected, min_expected: float = MIN_EXPECTED):
    """Merge bins, smallest expectation first, until every expectation reaches ``min_expected``."""
    obs = [float(o) for o in observed]
    exp = [float(e) for e in expected]
    order = sorted(range(len(exp)), key=lambda i: exp[i])
    groups = [[i] for i in order]
    while len(groups) > 1 and sum(exp[i] for i in groups[0]) < min_expected:
        merged = groups[0] + groups[1]
        groups = sorted([merged] + groups[2:], key=lambda g: sum(exp[i] for i in g))
    return ([sum(obs[i] for i in g) for g in groups], [sum(exp[i] for i in g) for g in groups])


def chi_square(observed, expected) -> tuple[float, float, int]:
    """Pearson goodness of fit; ``expected`` may be counts or probabilities."""
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    n = obs.sum()
    if not math.isclose(exp.sum(), n, rel_tol=1e-9):
        exp = exp / exp.sum() * n
    o, e = pool_bins(obs, exp)
    o, e = np.array(o), np.array(e)
    df = len(o) - 1
    stat = float(np.sum((o - e) ** 2 / e))
    if df < 1:
        return stat, 1.0, 0
    return stat, float(stats.chi2.sf(stat, df)), df


def chi_square_two_sample(counts_a: dict, counts_b: dict) -> tuple[float, float, int]:
    """Homogeneity test between two categorical samples."""
    keys = sorted(set(counts_a) | set(counts_b))
    table = np.array([[counts_a.get(k, 0) for k in keys], [counts_b.get(k, 0) for k in keys]], dtype=float)
    # pool sparse categories into one column
    col = table.sum(axis=0)
    expected_min = col * min(table.sum(axis=1)) / table.sum()
    keep = expected_min >= MIN_EXPECTED
    if (~keep).any():
        table = np.column_stack([table[:, keep], table[:, ~keep].sum(axis=1)])
    if table.shape[1] < 2:
        return 0.0, 1.0, 0
    res = stats.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue), int(res.dof)


def moment_z(samples, exact_moment: float, exact_second_moment: float, k: int = 1) -> float:
    """(mean(x^k) - m_k) / sqrt((m_2k - m_k^2) / n) with the exact variance."""
    x = np.asarray(samples, dtype=float) ** k
    var = exact_second_moment - exact_moment ** 2
    if not var > 0:
        raise ValueError("exact variance must be positive")
    return float((x.mean() - exact_moment) / math.sqrt(var / x.size))


def bonferroni(pvalues) -> float:
    """Smallest p-value times the number of tests, capped at 1."""
    pv = list(pvalues)
    return min(1.0, min(pv) * len(pv)) if pv else 1.0


def correlation_z(x, y) -> float:
    """Sample correlation scaled by sqrt(n); about N(0, 1) under independence."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = float(np.corrcoef(x, y)[0, 1])
    return r * math.sqrt(x.size)
