"""Monte Carlo and exact checks, one TestReport per claim.

Every check takes ``seed`` and derives all of its streams from it, so a
report is a deterministic function of its arguments.
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import numpy as np
from scipy import stats
from scipy.special import gammaln

from ..chain import chain_from, chain_next, chain_values, sample_chain_matrix
from ..distributions import (
    DEFAULT_N_TRUNC,
    MlParams,
    chain_beta_params,
    ml_moment,
    sample_beta,
    sample_dirichlet,
    sample_gamma,
    sample_ml_beta_half,
    sample_ml_family,
)
from ..linebreaking import (
    Algorithm,
    GrowthConfig,
    aldous_cut_points,
    grow,
    grow_aldous,
    grow_marchal,
)
from ..params import AlphaParam
from ..rng import RngStream
from ..rtree import distance_matrix, selection_identity
from .shapes import enumerate_shape_law, formula_shape_law, tree_signature
from .stats import (
    INCONCLUSIVE,
    SIGNIFICANCE,
    Z_LIMIT,
    TestReport,
    bonferroni,
    chi_square,
    chi_square_two_sample,
    correlation_z,
    ks_two_sample,
    ks_vs_cdf,
    moment_z,
)

SHAPE_FLOOR = 1e-3
EXACT_TOL = 1e-10


def _a(alpha) -> float:
    return AlphaParam(float(alpha)).alpha


# ------------------------------------------------------------------ shapes
def check_shape_formula(alpha, p: int) -> TestReport:
    """Closed-form shape law against the transition enumeration."""
    enum = enumerate_shape_law(alpha, p)
    form = formula_shape_law(alpha, p)
    worst = 0.0
    for key in set(enum.probs) | set(form.probs):
        e = enum.probs.get(key, Fraction(0))
        f = form.probs.get(key, Fraction(0))
        scale = max(abs(e), abs(f))
        if scale:
            worst = max(worst, float(abs(e - f) / scale))
    total_gap = float(abs(enum.total() - 1))
    return TestReport(f"shape-formula[alpha={alpha},p={p}]", "exact", max(worst, total_gap), None,
                      len(enum), None, threshold=EXACT_TOL,
                      detail={"shapes": len(enum), "table": enum.as_float()})


def shape_counts(alpha, ps, algorithm, n: int, seed: int) -> dict[int, Counter]:
    """Shape frequencies at each p in ``ps`` from n independent growth runs."""
    ps = sorted(set(ps))
    algo = Algorithm.parse(algorithm)
    counts = {p: Counter() for p in ps}
    p_max = ps[-1]
    if algo in (Algorithm.MARCHAL, Algorithm.REMY):
        for i in range(n):
            shapes = grow_marchal(alpha, p_max, RngStream(seed, i)).shapes
            for p in ps:
                counts[p][shapes[p - 1]] += 1
        return counts
    cfg = GrowthConfig(alpha, p_max, algo)
    want = set(ps)

    for i in range(n):
        def record(p, tree, m):
            if p in want:
                counts[p][tree_signature(tree)] += 1
        res = grow(cfg, RngStream(seed, i), callback=record)
        if 1 in want:
            counts[1][tree_signature(res.tree) if p_max == 1 else "(())"] += 1
    return counts


def shape_report(name: str, alpha, p: int, counts: Counter, seed: int) -> TestReport:
    table = enumerate_shape_law(alpha, p).as_float()
    unknown = set(counts) - set(table)
    n = sum(counts.values())
    if unknown:
        return TestReport(name, "chi-square", math.inf, 0.0, n, seed,
                          detail={"unreachable_shapes": sorted(unknown)})
    keys = sorted(table)
    obs = [counts.get(k, 0) for k in keys]
    exp = [table[k] * n for k in keys]
    stat, pv, df = chi_square(obs, exp)
    return TestReport(name, "chi-square", stat, pv, n, seed,
                      detail={"df": df, "observed": dict(zip(keys, obs)), "expected": dict(zip(keys, exp))})


def check_shape_frequencies(alpha, ps, algorithm, n: int, seed: int) -> list[TestReport]:
    algo = Algorithm.parse(algorithm)
    counts = shape_counts(alpha, ps, algo, n, seed)
    return [shape_report(f"shape-mc[{algo.value},alpha={alpha},p={p}]", alpha, p, counts[p], seed)
            for p in sorted(counts)]


def check_shape_two_sample(alpha, p: int, algo_a, algo_b, n: int, seed: int) -> TestReport:
    """Homogeneity of the shape tables produced by two algorithms."""
    a = shape_counts(alpha, [p], algo_a, n, seed)[p]
    b = shape_counts(alpha, [p], algo_b, n, seed + 1)[p]
    stat, pv, df = chi_square_two_sample(a, b)
    name = f"shape-2sample[{Algorithm.parse(algo_a).value}~{Algorithm.parse(algo_b).value},alpha={alpha},p={p}]"
    return TestReport(name, "chi-square", stat, pv, n, seed, detail={"df": df})


def check_labelled_shapes(alpha, p: int, n: int, seed: int) -> TestReport:
    """Leaf-labelled Marchal shapes against the labelled law (uniform at alpha = 2)."""
    table = enumerate_shape_law(alpha, p, labelled=True).as_float()
    counts = Counter()
    for i in range(n):
        tree = grow_marchal(alpha, p, RngStream(seed, i), record_shapes=False).tree
        counts[tree_signature(tree, labelled=True)] += 1
    keys = sorted(table)
    stat, pv, df = chi_square([counts.get(k, 0) for k in keys], [table[k] * n for k in keys])
    unknown = set(counts) - set(table)
    if unknown:
        stat, pv = math.inf, 0.0
    return TestReport(f"labelled-shapes[MARCHAL,alpha={alpha},p={p}]", "chi-square", stat, pv, n, seed,
                      detail={"df": df, "labelled_shapes": len(table)})


# ----------------------------------------------------------------- lengths
def _direct_lengths(alpha, p: int, size_t: int, n: int, rng: RngStream, n_trunc: int):
    """Total length and root-edge length under M_p * B_|t| * Dir(1, ..., 1)."""
    ap = AlphaParam(float(alpha))
    mp = np.asarray(sample_ml_family(ap, p, n_trunc, rng, size=n))
    b_param = (p * ap.alpha - 1) / (ap.alpha - 1) - size_t
    if abs(b_param) < 1e-12:
        b = np.ones(n)
    else:
        b = sample_beta(size_t, b_param, rng, size=n)
    d1 = sample_beta(1.0, size_t - 1.0, rng, size=n) if size_t > 1 else np.ones(n)
    total = mp * b
    return total, total * d1


def check_lengths_given_shape(alpha, p: int, n_trees: int, seed: int, shapes=None,
                              n_trunc: int = DEFAULT_N_TRUNC) -> list[TestReport]:
    """Lengths of algorithm-I trees conditioned on their shape, against the direct sampler.

    Conditioning is by rejection: every grown tree is filed under its shape.
    Shapes below the probability floor are reported inconclusive.
    """
    ap = AlphaParam(float(alpha))
    table = enumerate_shape_law(alpha, p).as_float() if p <= 6 else {}
    cfg = GrowthConfig(ap.alpha, p, Algorithm.I, n_trunc=n_trunc)
    harvest: dict[str, list[tuple[float, float, int]]] = {}
    for i in range(n_trees):
        tree = grow(cfg, RngStream(seed, i)).tree
        harvest.setdefault(tree_signature(tree), []).append(
            (tree.lengths.exact_total(), tree.lengths[0], tree.size))
    targets = sorted(table) if shapes is None else list(shapes)
    out = []
    direct_rng = RngStream(seed, n_trees + 1)
    for sig in targets:
        rows = harvest.get(sig, [])
        name = f"lengths-given-shape[alpha={alpha},p={p},shape={sig}]"
        prob = table.get(sig, len(rows) / max(n_trees, 1))
        if prob < SHAPE_FLOOR or len(rows) < 20:
            out.append(TestReport(name, "KS", math.nan, None, len(rows), seed, verdict=INCONCLUSIVE,
                                  detail={"shape_probability": prob}))
            continue
        arr = np.array(rows)
        size_t = int(arr[0, 2])
        tot, coord = _direct_lengths(ap.alpha, p, size_t, len(rows), direct_rng, n_trunc)
        s1, p1 = ks_two_sample(arr[:, 0], tot)
        s2, p2 = ks_two_sample(arr[:, 1], coord)
        out.append(TestReport(name, "KS", max(s1, s2), bonferroni([p1, p2]), len(rows), seed,
                              detail={"size": size_t, "p_total": p1, "p_root_edge": p2}))
    return out


def check_normalized(alpha, p: int, n: int, seed: int) -> TestReport:
    """Total length of the normalized tree against (I-tree total) / M_1."""
    a = _a(alpha)
    norm = [grow(GrowthConfig(a, p, Algorithm.NORMALIZED_I), RngStream(seed, i)).tree.total_length
            for i in range(n)]
    ratio = []
    for i in range(n):
        res = grow(GrowthConfig(a, p, Algorithm.I), RngStream(seed + 1, i))
        ratio.append(res.tree.total_length / res.m[0])
    s, pv = ks_two_sample(norm, ratio)
    return TestReport(f"normalized-length[alpha={alpha},p={p}]", "KS", s, pv, n, seed)


# ----------------------------------------------------------------- mixture
def mixture_total_length(alpha, p: int, n: int, rng: RngStream, n_trunc: int = DEFAULT_N_TRUNC):
    """M_p (prod beta_j + sum_i B_i (1 - beta_i) prod_{j>i} beta_j), all factors independent."""
    ap = AlphaParam(float(alpha))
    mp = np.asarray(sample_ml_family(ap, p, n_trunc, rng, size=n))
    if p == 1:
        return mp
    a, b = chain_beta_params(ap, np.arange(1, p, dtype=float))
    betas = np.column_stack([sample_beta(ai, b, rng, size=n, strict=True) for ai in a])
    if ap.is_brownian:
        bs = np.ones((n, p - 1))
    else:
        bs = np.column_stack([sample_beta(1.0, ap.b_shape, rng, size=n) for _ in range(p - 1)])
    # suffix[:, i] = prod_{j > i} beta_j over indices 1..p-1
    suffix = np.ones((n, p))
    for i in range(p - 2, -1, -1):
        suffix[:, i] = suffix[:, i + 1] * betas[:, i]
    s = suffix[:, 0] + np.sum(bs * (1.0 - betas) * suffix[:, 1:], axis=1)
    return mp * s


def check_total_length_mixture(alpha, p: int, n: int, seed: int,
                               n_trunc: int = DEFAULT_N_TRUNC) -> TestReport:
    a = _a(alpha)
    cfg = GrowthConfig(a, p, Algorithm.I, n_trunc=n_trunc)
    grown = [grow(cfg, RngStream(seed, i)).tree.total_length for i in range(n)]
    direct = mixture_total_length(a, p, n, RngStream(seed, n + 1), n_trunc)
    s, pv = ks_two_sample(grown, direct)
    return TestReport(f"total-length-mixture[alpha={alpha},p={p}]", "KS", s, pv, n, seed)


def check_ml_moments(alpha, p_max: int, n: int, seed: int, ks=(1, 2, 3),
                     n_trunc: int = DEFAULT_N_TRUNC) -> list[TestReport]:
    """Empirical E[M_p^k] along chain trajectories against the closed form."""
    ap = AlphaParam(float(alpha))
    mat = sample_chain_matrix(ap, p_max, n, RngStream(seed), n_trunc)
    out = []
    for p in range(1, p_max + 1):
        params = MlParams(ap.beta_index, ap.theta(p))
        for k in ks:
            mk, m2k = ml_moment(params, k), ml_moment(params, 2 * k)
            z = moment_z(mat[:, p - 1], mk, m2k, k)
            out.append(TestReport(f"ml-moment[alpha={alpha},p={p},k={k}]", "moment-z", z, None, n, seed,
                                  threshold=Z_LIMIT, detail={"target": mk,
                                                             "empirical": float(np.mean(mat[:, p - 1] ** k))}))
    return out


def check_chain_independence(alpha, p: int, n: int, seed: int) -> TestReport:
    """M_p is independent of the earlier backward factors: corr(M_p, M_1 / M_2) ~ 0."""
    mat = sample_chain_matrix(_a(alpha), p, n, RngStream(seed))
    z = correlation_z(mat[:, p - 1], mat[:, 0] / mat[:, 1])
    return TestReport(f"chain-independence[alpha={alpha},p={p}]", "moment-z", z, None, n, seed,
                      threshold=Z_LIMIT)


# --------------------------------------------------------------- brownian
def brownian_increments(mat: np.ndarray) -> np.ndarray:
    """Increments of M_p^2 / 4 with M_0 = 0, one column per p."""
    sq = mat ** 2 / 4.0
    return np.diff(np.column_stack([np.zeros(len(sq)), sq]), axis=1)


def check_brownian_reduction(p_max: int, n: int, seed: int, mat: np.ndarray | None = None,
                             route: str = "backward") -> list[TestReport]:
    """Increments of M_p^2 / 4 are i.i.d. Exp(1) at alpha = 2.

    ``route="backward"`` builds trajectories from the Beta-factor recursion,
    ``route="chain"`` takes them from the production chain sampler.
    """
    if mat is None:
        if route == "backward":
            mat = _brownian_backward_matrix(p_max, n, seed)
        else:
            mat = sample_chain_matrix(2.0, p_max, n, RngStream(seed))
    inc = brownian_increments(mat[:, :p_max])
    out = []
    for j in range(inc.shape[1]):
        s, pv = ks_vs_cdf(inc[:, j], stats.expon.cdf)
        out.append(TestReport(f"brownian-increment[{route},{j + 1}]", "KS", s, pv, len(inc), seed))
    for j in range(inc.shape[1] - 1):
        z = correlation_z(inc[:, j], inc[:, j + 1])
        out.append(TestReport(f"brownian-correlation[{route},{j + 1},{j + 2}]", "moment-z", z, None,
                              len(inc), seed, threshold=Z_LIMIT))
    return out


def check_brownian_path(values, seed: int | None = None) -> list[TestReport]:
    """One alpha = 2 trajectory (for instance a chain CSV): the increments of
    M_p^2 / 4 along the path are Exp(1) and uncorrelated at lag one."""
    inc = brownian_increments(np.asarray(values, dtype=float)[None, :])[0]
    s, pv = ks_vs_cdf(inc, stats.expon.cdf)
    out = [TestReport("brownian-path-increments", "KS", s, pv, len(inc), seed)]
    if len(inc) > 2:
        z = correlation_z(inc[:-1], inc[1:])
        out.append(TestReport("brownian-path-lag1", "moment-z", z, None, len(inc) - 1, seed, threshold=Z_LIMIT))
    return out


def _brownian_backward_matrix(p_max: int, n: int, seed: int) -> np.ndarray:
    """Trajectories through the Beta-factor recursion, not the Poisson shortcut.

    The top value M_{p_max} is drawn exactly and the earlier values peeled off
    with M_p = M_{p+1} beta_p, beta_p independent of M_{p+1}.
    """
    ap = AlphaParam(2.0)
    rng = RngStream(seed)
    out = np.empty((n, p_max))
    out[:, p_max - 1] = sample_ml_beta_half(p_max - 0.5, rng, size=n)
    for p in range(p_max - 1, 0, -1):
        a, b = chain_beta_params(ap, p)
        out[:, p - 1] = out[:, p] * sample_beta(a, b, rng, size=n, strict=True)
    return out


def check_transition_density(m: float, n: int, seed: int) -> TestReport:
    """chain_next from M_p = m at alpha = 2 against the closed-form transition law."""
    rng = RngStream(seed)
    state = chain_from(m)
    draws = np.array([chain_next(state, 2.0, rng).m for _ in range(n)])
    s, pv = ks_vs_cdf(draws, lambda x: 1.0 - np.exp(-(np.maximum(x, m) ** 2 - m * m) / 4.0))
    return TestReport(f"brownian-transition[m={m}]", "KS", s, pv, n, seed)


def check_aldous_first_cut(n: int, seed: int) -> TestReport:
    """R_1^2 under intensity t dt is exponential with mean 2."""
    r1 = aldous_cut_points(1, RngStream(seed), 1.0, size=n)[:, 0]
    s, pv = ks_vs_cdf(r1 ** 2, stats.expon(scale=2.0).cdf)
    return TestReport("aldous-first-cut", "KS", s, pv, n, seed)


def check_aldous_equivalence(p: int, n: int, seed: int) -> list[TestReport]:
    """Algorithm I at alpha = 2 against Aldous' construction at intensity t dt / 2."""
    cfg = GrowthConfig(2.0, p, Algorithm.I)
    tot_i, d_i, tot_a, d_a = [], [], [], []
    for i in range(n):
        t = grow(cfg, RngStream(seed, i)).tree
        tot_i.append(t.total_length)
        d_i.append(distance_matrix(t)[1, 2] if p >= 2 else t.total_length)
        u = grow_aldous(p, RngStream(seed + 1, i), intensity=0.5).tree
        tot_a.append(u.total_length)
        d_a.append(distance_matrix(u)[1, 2] if p >= 2 else u.total_length)
    s1, p1 = ks_two_sample(tot_i, tot_a)
    s2, p2 = ks_two_sample(d_i, d_a)
    return [TestReport(f"aldous-total-length[p={p}]", "KS", s1, p1, n, seed),
            TestReport(f"aldous-leaf-distance[p={p}]", "KS", s2, p2, n, seed)]


# --------------------------------------------------------------- dirichlet
def _beta_marginals(vec: np.ndarray, params) -> list[float]:
    """KS p-values of each coordinate and each pairwise sum against their Beta laws."""
    c = np.asarray(params, dtype=float)
    total = c.sum()
    pv = []
    k = len(c)
    for i in range(k):
        pv.append(ks_vs_cdf(vec[:, i], stats.beta(c[i], total - c[i]).cdf)[1])
    for i in range(k):
        for j in range(i + 1, k):
            s = c[i] + c[j]
            if total - s > 0:
                pv.append(ks_vs_cdf(vec[:, i] + vec[:, j], stats.beta(s, total - s).cdf)[1])
    return pv


def _dir_report(name: str, vec: np.ndarray, params, seed: int, extra=()) -> TestReport:
    pv = _beta_marginals(vec, params) + list(extra)
    return TestReport(name, "KS", float(len(pv)), bonferroni(pv), len(vec), seed,
                      detail={"tests": len(pv), "min_p": min(pv), "params": [float(x) for x in params]})


def _dirichlet(a, rng: RngStream, n: int) -> np.ndarray:
    if len(a) == 1:
        return np.ones((n, 1))
    return sample_dirichlet(tuple(a), rng, size=n)


def check_gamma_ml(beta: float, theta: float, n: int, seed: int, alpha=None, p=None) -> TestReport:
    """G^beta M ~ Gamma(theta / beta) for G ~ Gamma(theta) independent of M ~ ML(beta, theta)."""
    rng = RngStream(seed)
    if alpha is None:
        m = sample_ml_beta_half(theta, rng, size=n)
    else:
        m = sample_ml_family(alpha, p, DEFAULT_N_TRUNC, rng, size=n)
    g = sample_gamma(theta, rng, size=n)
    s, pv = ks_vs_cdf(g ** beta * m, stats.gamma(theta / beta).cdf)
    return TestReport(f"gamma-ml[beta={beta:.4g},theta={theta:.4g}]", "KS", s, pv, n, seed)


def check_size_biased(a, n: int, seed: int) -> TestReport:
    """Size-biased index law and the conditional Dirichlet law given the index."""
    rng = RngStream(seed)
    d = sample_dirichlet(tuple(a), rng, size=n)
    u = rng.generator.random(n)
    idx = (u[:, None] > np.cumsum(d, axis=1)).sum(axis=1)
    idx = np.minimum(idx, len(a) - 1)
    a = np.asarray(a, dtype=float)
    _, p_index, _ = chi_square(np.bincount(idx, minlength=len(a)), a / a.sum())
    pv = [p_index]
    for i in range(len(a)):
        sub = d[idx == i]
        shifted = a.copy()
        shifted[i] += 1
        pv.extend(_beta_marginals(sub, shifted))
    return TestReport(f"dirichlet-size-biased[{','.join(f'{x:g}' for x in a)}]", "KS", float(len(pv)),
                      bonferroni(pv), n, seed, detail={"tests": len(pv), "p_index": p_index})


def check_decomposition(a, p: int, n: int, seed: int) -> TestReport:
    """(D_1..D_p) = B_p (D~_1..D~_p) with B_p Beta and D~ Dirichlet, independent."""
    a = np.asarray(a, dtype=float)
    d = sample_dirichlet(tuple(a), RngStream(seed), size=n)
    bp = d[:, :p].sum(axis=1)
    dt = d[:, :p] / bp[:, None]
    pv = [ks_vs_cdf(bp, stats.beta(a[:p].sum(), a[p:].sum()).cdf)[1]]
    if p > 1:
        pv.extend(_beta_marginals(dt, a[:p]))
        z = correlation_z(bp, dt[:, 0])
        pv.append(2 * stats.norm.sf(abs(z)))
    return TestReport(f"dirichlet-decomposition[{','.join(f'{x:g}' for x in a)};p={p}]", "KS",
                      float(len(pv)), bonferroni(pv), n, seed, detail={"tests": len(pv)})


def _recursion_inputs(alpha: float, p: int, k: int, a, first_two: bool, n: int, rng: RngStream):
    ap = AlphaParam(alpha)
    lo = p if first_two else p + 1
    if not lo <= k <= 2 * p - 1 and not (first_two and p == k == 1):
        raise ValueError(f"k={k} outside the admissible range for p={p}")
    target = ((p * alpha - 1) if first_two else ((p + 1) * alpha - 2)) / (alpha - 1) - k
    if len(a) != k - p or abs(sum(a) - target) > 1e-9:
        raise ValueError(f"parameters {a} must have length {k - p} and sum {target}")
    b = sample_beta(1.0, ap.b_shape, rng, size=n)
    bp_a, bp_b = chain_beta_params(ap, p)
    bp = sample_beta(bp_a, bp_b, rng, size=n, strict=True)
    head = [2.0] + [1.0] * (k - 1) if first_two else [1.0] * k
    d = _dirichlet(head + list(a), rng, n)
    return ap, b, bp, d


def check_recursion_edge(alpha: float, p: int, k: int, a, i_star: int, n: int, seed: int) -> TestReport:
    """Gluing on an edge: the rescaled vector is Dirichlet with a_{i*} grown by (2-alpha)/(alpha-1)."""
    ap, b, bp, d = _recursion_inputs(alpha, p, k, a, False, n, RngStream(seed))
    extra = (1 - bp) * b / bp
    rest = d[:, k:].copy()
    rest[:, i_star - 1] += (1 - bp) * (1 - b) / bp
    vec = bp[:, None] * np.column_stack([d[:, :k], extra, rest])
    params = [1.0] * (k + 1) + list(a)
    params[k + i_star] += ap.b_shape
    return _dir_report(f"dirichlet-recursion-edge[alpha={alpha},p={p},k={k},i={i_star}]", vec, params, seed)


def check_recursion_vertex(alpha: float, p: int, k: int, a, n: int, seed: int) -> TestReport:
    """Splitting the first coordinate uniformly and appending two masses."""
    rng = RngStream(seed)
    ap, b, bp, d = _recursion_inputs(alpha, p, k, a, True, n, rng)
    u = rng.generator.random(n)
    cols = [d[:, 0] * u, d[:, 0] * (1 - u), d[:, 1:k], (1 - bp) * b / bp, d[:, k:], (1 - bp) * (1 - b) / bp]
    vec = bp[:, None] * np.column_stack(cols)
    params = [1.0] * (k + 2) + list(a) + [ap.b_shape]
    return _dir_report(f"dirichlet-recursion-vertex[alpha={alpha},p={p},k={k}]", vec, params, seed)


def check_lengths_masses(thetas, n: int, seed: int, beta: float = 0.5) -> list[TestReport]:
    """M Z against (X_i^beta M^(i))_i with beta = 1/2, where both sides are exact."""
    if beta != 0.5:
        raise ValueError("only beta = 1/2 has exact samplers on both sides")
    th = np.asarray(thetas, dtype=float)
    theta = th.sum()
    rng = RngStream(seed)
    m = sample_ml_beta_half(theta, rng, size=n)
    z = sample_dirichlet(tuple(th / beta), rng, size=n)
    lhs = m[:, None] * z
    x = sample_dirichlet(tuple(th), rng, size=n)
    rhs = np.column_stack([x[:, i] ** beta * sample_ml_beta_half(th[i], rng, size=n) for i in range(len(th))])
    tag = ",".join(f"{t:g}" for t in th)
    pv = [ks_two_sample(lhs[:, i], rhs[:, i])[1] for i in range(len(th))]
    out = [TestReport(f"lengths-masses[{tag}]", "KS", float(len(pv)), bonferroni(pv), n, seed,
                      detail={"pvalues": pv})]
    # first moment of coordinate 1 from the right-hand side in closed form
    t1 = th[0]
    ex_pow = math.exp(gammaln(theta) + gammaln(t1 + beta) - gammaln(t1) - gammaln(theta + beta))
    target = ex_pow * ml_moment(MlParams(beta, t1), 1)
    za, zb = t1 / beta, (theta - t1) / beta
    ez2 = za * (za + 1) / ((za + zb) * (za + zb + 1))
    second = ml_moment(MlParams(beta, theta), 2) * ez2
    zscore = moment_z(lhs[:, 0], target, second)
    out.append(TestReport(f"lengths-masses-moment[{tag}]", "moment-z", zscore, None, n, seed,
                          threshold=Z_LIMIT, detail={"target": target}))
    return out


# ----------------------------------------------------------------- ledgers
def check_ledgers(alpha, p: int, seed: int) -> list[TestReport]:
    """Weight ledger and degree identity after every round, as worst relative errors."""
    a = _a(alpha)
    worst = {"weight": 0.0, "degree": 0.0, "selection": 0.0}

    def audit_ii(q, tree, m):
        gap = abs(tree.weight_sum - (m - tree.total_length))
        worst["weight"] = max(worst["weight"], gap / m)
        _degree(q, tree)

    def audit_i(q, tree, m):
        _degree(q, tree)
        if tree.selection is not None:
            target = selection_identity(q, tree.size, a)
            worst["selection"] = max(worst["selection"], abs(tree.selection.total() - target) / (q * a - 1))

    def _degree(q, tree):
        census = math.fsum((d - 1 - a) * c for d, c in tree.census.items())
        target = selection_identity(q, tree.size, a)
        worst["degree"] = max(worst["degree"], abs(census - target) / (q * a - 1))

    grow(GrowthConfig(a, p, Algorithm.II), RngStream(seed, 0), callback=audit_ii)
    grow(GrowthConfig(a, p, Algorithm.I), RngStream(seed, 1), callback=audit_i)
    return [TestReport(f"ledger-{key}[alpha={alpha},p={p}]", "exact", val, None, p, seed, threshold=EXACT_TOL)
            for key, val in worst.items()]


def check_edge_limit(alpha, p_lo: int, p_hi: int, seed: int, runs: int = 20,
                     rel_tol: float = 0.01) -> TestReport:
    """Running average of L_p/M_p over [p_lo, p_hi] against alpha - 1, pooled over runs.

    A single trajectory fluctuates by about 1% around the limit at these
    sizes, so the average is taken over independent runs as well.
    """
    a = _a(alpha)
    per_run = []
    for r in range(runs):
        acc = []

        def record(q, tree, m):
            if q >= p_lo:
                acc.append(tree.total_length / m)
        grow(GrowthConfig(a, p_hi, Algorithm.I), RngStream(seed, r), callback=record)
        per_run.append(math.fsum(acc) / len(acc))
    avg = math.fsum(per_run) / runs
    rel = abs(avg - (a - 1)) / (a - 1)
    return TestReport(f"edge-limit[alpha={alpha},p={p_lo}..{p_hi}]", "exact", rel, None, runs, seed,
                      threshold=rel_tol, detail={"average": avg, "per_run": per_run})


def check_nested(alpha, p: int, seed: int) -> TestReport:
    """Distances among earlier leaves never change as the tree grows."""
    a = _a(alpha)
    res = grow(GrowthConfig(a, p, Algorithm.I, snapshots=tuple(range(1, p + 1))), RngStream(seed))
    final = distance_matrix(res.tree)
    worst = 0.0
    for q, snap in res.snapshots.items():
        d = distance_matrix(snap)
        worst = max(worst, float(np.max(np.abs(d - final[: q + 1, : q + 1]))))
    return TestReport(f"nested-snapshots[alpha={alpha},p={p}]", "exact", worst, None, p, seed,
                      threshold=1e-12)


def check_calibration(reps: int, n: int, seed: int) -> TestReport:
    """Rejection rate of the KS kernel under a true null, as a z-score against the level."""
    rng = RngStream(seed)
    rejections = 0
    for _ in range(reps):
        x = rng.generator.random(n)
        if ks_vs_cdf(x, stats.uniform.cdf)[1] <= SIGNIFICANCE:
            rejections += 1
    rate = rejections / reps
    z = (rate - SIGNIFICANCE) / math.sqrt(SIGNIFICANCE * (1 - SIGNIFICANCE) / reps)
    return TestReport("kernel-calibration", "moment-z", z, None, reps, seed, threshold=Z_LIMIT,
                      detail={"rate": rate})
