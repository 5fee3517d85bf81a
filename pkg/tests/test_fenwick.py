import math

import pytest
from hypothesis import given, strategies as st

from stabletree.fenwick import Fenwick

weights = st.lists(st.floats(0.0, 100.0, allow_nan=False), min_size=1, max_size=80)


def linear_find(values, target):
    acc = 0.0
    for i, v in enumerate(values):
        if acc + v > target:
            return i
        acc += v
    return len(values)


@given(weights, st.lists(st.tuples(st.integers(0, 10**6), st.floats(0.0, 50.0)), max_size=40))
def test_prefix_sums_track_updates(values, ops):
    f = Fenwick(capacity=2)
    for v in values:
        f.append(v)
    ref = list(values)
    for idx, val in ops:
        i = idx % len(ref)
        if idx % 3 == 0:
            f.set(i, val)
            ref[i] = val
        else:
            f.add(i, val)
            ref[i] += val
    for i in range(len(ref) + 1):
        assert f.prefix(i) == pytest.approx(math.fsum(ref[:i]), rel=1e-12, abs=1e-9)
    assert f.total() == pytest.approx(f.exact_total(), rel=1e-12, abs=1e-9)
    assert f.max_drift() <= 1e-9 * max(1.0, f.exact_total())


@given(weights, st.floats(0.0, 1.0, exclude_max=True))
def test_find_agrees_with_linear_scan(values, u):
    f = Fenwick(values)
    total = f.exact_total()
    if total == 0:
        return
    i, rem = f.find(u * total)
    j = linear_find(values, u * total)
    if j < len(values):
        # rounding can only move the answer across a boundary by a hair
        assert i == j or abs(f.prefix(max(i, j)) - u * total) < 1e-9 * total
        assert values[i] > 0
        assert 0 <= rem <= values[i] + 1e-9 * total


def test_find_skips_zero_weights():
    f = Fenwick([0.0, 2.0, 0.0, 0.0, 1.0])
    assert f.find(0.0)[0] == 1
    assert f.find(1.99)[0] == 1
    assert f.find(2.0)[0] == 4
    assert f.find(2.5) == (4, 0.5)
    assert f.find(3.5)[0] == 5


def test_growth_keeps_values():
    f = Fenwick(capacity=1)
    for k in range(1, 100):
        f.append(float(k))
    assert len(f) == 99
    assert f.total() == 99 * 100 / 2
    assert f[41] == 42.0
