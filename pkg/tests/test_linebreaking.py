import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabletree.errors import ParameterError
from stabletree.linebreaking import (
    Algorithm,
    GrowthConfig,
    aldous_cut_points,
    grow,
    grow_marchal,
    write_trace_csv,
)
from stabletree.rng import RngStream
from stabletree.rtree import degree_census, shape_code


def test_p1_is_a_single_segment():
    res = grow(GrowthConfig(1.5, 1, seed=3))
    assert res.tree.n_leaves == 1 and res.tree.n_edges == 1
    assert res.tree.total_length == res.m[0]


@pytest.mark.parametrize("algo", [Algorithm.I, Algorithm.II])
def test_trace_is_consistent(algo):
    res = grow(GrowthConfig(1.5, 200, algo, seed=7, trace=True, weight_tracking=True))
    rows = res.trace
    assert len(rows) == 199
    m = res.m
    assert all(b > a for a, b in zip(m, m[1:]))
    for r in rows:
        assert 0 < r.b <= 1
        assert r.branch_length + r.leftover == pytest.approx(r.m_next - r.m_p, rel=1e-12)
        assert r.kind in ("edge", "vertex")
    total = m[0] + sum(r.branch_length for r in rows)
    assert res.tree.total_length == pytest.approx(total, rel=1e-12)
    if algo is Algorithm.II:
        # lengths plus masses account for the whole chain value
        assert res.tree.total_length + res.tree.weight_sum == pytest.approx(m[-1], rel=1e-12)


@given(st.integers(0, 2**32), st.sampled_from(list(Algorithm)))
@settings(max_examples=30)
def test_leaf_count_and_validity(seed, algo):
    alpha = 2.0 if algo in (Algorithm.ALDOUS, Algorithm.REMY) else 1.5
    res = grow(GrowthConfig(alpha, 25, algo, seed=seed))
    assert res.tree.n_leaves == 25
    res.tree.validate()


def test_length_never_exceeds_chain():
    res = grow(GrowthConfig(1.3, 500, Algorithm.I, seed=1, trace=True))
    acc = res.m[0]
    for r in res.trace:
        acc += r.branch_length
        assert acc <= r.m_next * (1 + 1e-12)


def test_brownian_is_binary():
    for algo in (Algorithm.I, Algorithm.II, Algorithm.ALDOUS):
        res = grow(GrowthConfig(2.0, 300, algo, seed=2))
        assert max(degree_census(res.tree)) == 3
        assert res.tree.n_edges == 2 * 300 - 1


def test_brownian_uses_whole_increment():
    res = grow(GrowthConfig(2.0, 50, Algorithm.I, seed=4, trace=True))
    assert all(r.b == 1.0 and r.leftover == 0.0 for r in res.trace)
    assert res.tree.total_length == pytest.approx(res.m[-1], rel=1e-12)


def test_snapshots_are_nested():
    res = grow(GrowthConfig(1.5, 40, Algorithm.I, seed=9, snapshots=(1, 5, 20, 40)))
    assert sorted(res.snapshots) == [1, 5, 20, 40]
    for q, t in res.snapshots.items():
        assert t.n_leaves == q
    # every earlier leaf keeps its distances to the root and to the others
    from stabletree.rtree import distance_matrix
    d_small = distance_matrix(res.snapshots[5])
    d_big = distance_matrix(res.snapshots[40])
    np.testing.assert_allclose(d_big[:6, :6], d_small, rtol=1e-12)


def test_same_seed_same_tree():
    a = grow(GrowthConfig(1.5, 100, Algorithm.II, seed=5))
    b = grow(GrowthConfig(1.5, 100, Algorithm.II, seed=5))
    assert a.m == b.m
    assert a.tree.lengths.values == b.tree.lengths.values


def test_normalized_starts_at_one():
    res = grow(GrowthConfig(1.5, 10, Algorithm.NORMALIZED_I, seed=1))
    assert res.m[0] == 1.0


def test_config_validation():
    with pytest.raises(ParameterError):
        GrowthConfig(1.0, 10)
    with pytest.raises(ParameterError):
        GrowthConfig(1.5, 0)
    assert Algorithm.parse("normalized_i") is Algorithm.NORMALIZED_I


def test_marchal_steps_and_remy_shapes():
    res = grow_marchal(1.5, 6, RngStream(0))
    assert len(res.shapes) == 6
    assert res.shapes[0] == "(())"
    assert all(e == 1.0 for e in res.tree.lengths.values)
    remy = grow_marchal(2.0, 30, RngStream(1), record_shapes=False)
    assert max(degree_census(remy.tree)) == 3


def test_aldous_cut_points_law():
    from scipy import stats
    r = aldous_cut_points(1, RngStream(2), 1.0, size=20_000)[:, 0]
    # R_1^2 / 2 is Exp(1) at unit intensity
    assert stats.kstest(r ** 2 / 2, "expon").pvalue > 1e-3


def test_trace_csv_header():
    res = grow(GrowthConfig(1.5, 5, seed=0, trace=True))
    buf = io.StringIO()
    write_trace_csv(res.trace, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "p,M_p,B,kind,host,branch_length"
    assert len(lines) == 5
    assert float(lines[1].split(",")[1]) == res.m[0]


def test_callback_sees_each_round():
    seen = []
    grow(GrowthConfig(1.5, 12, seed=0), callback=lambda p, t, m: seen.append((p, t.n_leaves, m)))
    assert [s[0] for s in seen] == list(range(2, 13))
    assert all(p == n for p, n, _ in seen)


def test_large_tree_accounting():
    res = grow(GrowthConfig(1.5, 100_000, Algorithm.II, seed=3, weight_tracking=True))
    t = res.tree
    assert t.n_leaves == 100_000
    assert abs(t.total_length + t.weight_sum - res.m[-1]) <= 1e-9 * res.m[-1]
    assert math.isclose(t.total_length, math.fsum(t.lengths.values), rel_tol=1e-12)
