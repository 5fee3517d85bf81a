from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from stabletree.errors import RangeError
from stabletree.verify.shapes import (
    automorphisms,
    degree_weight,
    enumerate_shape_law,
    formula_shape_law,
    labelled_trees,
    signature,
)

BINARY3 = "(((()())()))"
STAR3 = "((()()()))"
STAR4 = "((()()()()))"


def test_p1_and_p2_are_degenerate():
    for a in (1.2, 1.5, 2.0):
        assert enumerate_shape_law(a, 1).probs == {"(())": 1}
        assert enumerate_shape_law(a, 2).probs == {"((()()))": 1}
        assert formula_shape_law(a, 2).probs == {"((()()))": 1}


def test_p3_hand_values():
    # hand values: binary 3(a-1)/(2a-1), star (2-a)/(2a-1)
    t = enumerate_shape_law(1.5, 3)
    assert t.probs == {BINARY3: Fraction(3, 4), STAR3: Fraction(1, 4)}
    assert enumerate_shape_law(2.0, 3).probs == {BINARY3: 1}
    a = Fraction(13, 10)
    t = enumerate_shape_law(a, 3)
    assert t[BINARY3] == 3 * (a - 1) / (2 * a - 1)
    assert t[STAR3] == (2 - a) / (2 * a - 1)


def test_p4_hand_values():
    # star with one degree-5 vertex: reached only by star -> vertex, 1/4 * (3 - a)/(3a - 1) = 3/28
    t = enumerate_shape_law(1.5, 4)
    assert t[STAR4] == Fraction(3, 28)
    # fully binary: binary at p=3, then one of five edges: 3/4 * 5(a - 1)/(3a - 1) = 15/28
    bin_total = sum(v for k, v in formula_shape_law(1.5, 4).probs.items() if _max_degree(k) == 3)
    assert bin_total == Fraction(15, 28)
    assert sum(v for k, v in t.probs.items() if _max_degree(k) == 3) == Fraction(15, 28)


def _max_degree(sig: str) -> int:
    """Largest vertex degree in a signature (children count plus the parent edge)."""
    best, stack = 0, []
    for ch in sig:
        if ch == "(":
            if stack:
                stack[-1] += 1
            stack.append(0)
        else:
            kids = stack.pop()
            if stack and kids:
                best = max(best, kids + 1)
    return best


@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.8, 2.0])
@pytest.mark.parametrize("p", [3, 4, 5, 6])
def test_two_routes_agree(alpha, p):
    e = enumerate_shape_law(alpha, p)
    f = formula_shape_law(alpha, p)
    assert e.probs == f.probs
    assert e.total() == 1


@given(st.fractions(Fraction(1, 100), Fraction(99, 100)))
@settings(max_examples=15)
def test_routes_agree_for_arbitrary_alpha(frac):
    a = 1 + frac
    assert enumerate_shape_law(a, 5).probs == formula_shape_law(a, 5).probs


def test_cap():
    with pytest.raises(RangeError):
        enumerate_shape_law(1.5, 7)
    assert len(enumerate_shape_law(1.5, 8, cap=8)) > 0


def test_degree_weight_and_automorphisms():
    a = Fraction(3, 2)
    assert degree_weight(3, a) == a - 1
    assert degree_weight(4, a) == (a - 1) * (2 - a)
    assert degree_weight(5, a) == (a - 1) * (2 - a) * (3 - a)
    assert automorphisms(((), ())) == 2
    assert automorphisms(((), (), ())) == 6
    assert automorphisms((((), ()), ((), ()))) == 8


def test_labelled_counts():
    # planted leaf-labelled trees without degree-2 vertices: 1, 1, 4, 26
    assert [len(labelled_trees(p)) for p in (1, 2, 3, 4)] == [1, 1, 4, 26]
    t = enumerate_shape_law(1.5, 4, labelled=True)
    assert len(t) == 26 and t.total() == 1


def test_labelled_law_is_exchangeable():
    t = enumerate_shape_law(Fraction(7, 5), 4, labelled=True)
    by_shape = {}
    for key, v in t.probs.items():
        by_shape.setdefault(_unlabel(key), set()).add(v)
    assert all(len(vals) == 1 for vals in by_shape.values())


def _unlabel(sig: str) -> str:
    import re
    return signature_from_unlabelled(re.sub(r"\[\d+\]", "()", sig))


def signature_from_unlabelled(sig: str) -> str:
    # re-sort children after erasing labels
    def parse(i):
        kids = []
        i += 1
        while sig[i] != ")":
            k, i = parse(i)
            kids.append(k)
        return tuple(sorted(kids, key=repr)), i + 1
    node, _ = parse(0)
    return signature(node)
