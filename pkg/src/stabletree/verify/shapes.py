"""Exact shape laws by two independent routes.

Route one pushes probability mass through every Marchal transition. Route two
lists every shape with p leaves, counts its leaf labellings through the
automorphism group and applies the closed-form product
``prod_v w(d_v) / prod_{k=1}^{p-1} (k alpha - 1)`` with
``w(d) = (alpha - 1) prod_{k=2}^{d-2} (k - alpha)``.

Trees are nested tuples: a vertex is the sorted tuple of its children, an
unlabelled leaf is ``()`` and a labelled leaf is its integer label. The root
is the 1-tuple holding its only child.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

from ..errors import ParameterError, RangeError
from ..params import AlphaParam
from ..rtree import WeightedRTree

ENUM_CAP = 6


def exact_alpha(alpha: float | Fraction) -> Fraction:
    AlphaParam(float(alpha))
    return alpha if isinstance(alpha, Fraction) else Fraction(str(alpha))


def _canon(children) -> tuple:
    return tuple(sorted(children, key=repr))


def _is_leaf(x) -> bool:
    return isinstance(x, int) or x == ()


def signature(node, labelled: bool = False) -> str:
    """AHU code matching :func:`stabletree.rtree.shape_code`; labelled leaves print as [k]."""
    if _is_leaf(node):
        return f"[{node}]" if labelled and isinstance(node, int) else "()"
    return "(" + "".join(sorted(signature(c, labelled) for c in node)) + ")"


def tree_signature(tree: WeightedRTree, labelled: bool = False) -> str:
    """Signature of a grown tree, built through the nested-tuple form."""
    ch = tree.children()
    built: dict[int, object] = {}
    stack = [(0, False)]
    while stack:
        v, done = stack.pop()
        if done:
            if not ch[v]:
                built[v] = tree.leaf_label[v] if labelled else ()
            else:
                built[v] = _canon(built.pop(c) for c in ch[v])
        else:
            stack.append((v, True))
            stack.extend((c, False) for c in ch[v])
    return signature(built[0], labelled)


def _moves(x, a: Fraction, leaf):
    """(new subtree, weight) for every Marchal move inside ``x`` or on its parent edge."""
    yield _canon((x, leaf)), a - 1
    if not _is_leaf(x):
        yield _canon(x + (leaf,)), len(x) - a
        for i, c in enumerate(x):
            for c2, w in _moves(c, a, leaf):
                yield _canon(x[:i] + (c2,) + x[i + 1:]), w


@dataclass(frozen=True)
class ShapeTable:
    """Exact law over shape signatures for given (alpha, p)."""

    alpha: Fraction
    p: int
    probs: dict
    labelled: bool = False

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def as_float(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.probs.items()}

    def __getitem__(self, key: str):
        return self.probs[key]

    def __len__(self) -> int:
        return len(self.probs)


def _check_p(p: int, cap: int) -> None:
    if p < 1 or int(p) != p:
        raise ParameterError(f"p must be a positive integer, got {p}")
    if p > cap:
        raise RangeError(f"exhaustive enumeration is capped at p <= {cap}, got {p}")


def enumerate_shape_law(alpha, p: int, labelled: bool = False, cap: int = ENUM_CAP) -> ShapeTable:
    """Propagate the exact Marchal transition law from one leaf to p leaves."""
    _check_p(p, cap)
    a = exact_alpha(alpha)
    states = {((1 if labelled else ()),): Fraction(1)}
    for q in range(1, p):
        total = q * a - 1
        leaf = q + 1 if labelled else ()
        nxt: dict = {}
        for root, pr in states.items():
            moves = list(_moves(root[0], a, leaf))
            wsum = sum((w for _, w in moves), Fraction(0))
            if wsum != total:
                raise AssertionError(f"transition weights sum to {wsum}, expected {total}")
            for child, w in moves:
                if w == 0:
                    continue
                key = (child,)
                nxt[key] = nxt.get(key, Fraction(0)) + pr * w / total
        states = nxt
    probs: dict[str, Fraction] = {}
    for root, pr in states.items():
        s = signature(root, labelled)
        probs[s] = probs.get(s, Fraction(0)) + pr
    return ShapeTable(a, p, probs, labelled)


# ------------------------------------------------------------- formula route
@lru_cache(maxsize=None)
def _shapes(n: int) -> tuple:
    """All unlabelled subtrees with n leaves and no degree-2 vertex."""
    if n == 1:
        return ((),)
    out = []
    for parts in _partitions(n, n, 2):
        pools = [(_shapes(k), k) for k in parts]
        # choose one subtree per part; equal parts take nondecreasing indices
        for combo in _pick(pools):
            out.append(_canon(combo))
    return tuple(sorted(set(out), key=repr))


def _partitions(n: int, largest: int, min_parts: int):
    """Nonincreasing partitions of n with parts <= largest and at least min_parts parts."""
    if n == 0:
        if min_parts <= 0:
            yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k, min_parts - 1):
            yield (k,) + rest


def _pick(pools):
    groups = Counter(k for _, k in pools)
    sizes = sorted(groups, reverse=True)
    choices = []
    for k in sizes:
        choices.append(list(combinations_with_replacement(_shapes(k), groups[k])))

    def rec(i):
        if i == len(choices):
            yield ()
            return
        for c in choices[i]:
            for rest in rec(i + 1):
                yield c + rest

    yield from rec(0)


def automorphisms(node) -> int:
    if _is_leaf(node):
        return 1
    out = 1
    for c in node:
        out *= automorphisms(c)
    for mult in Counter(node).values():
        out *= math.factorial(mult)
    return out


def degree_weight(d: int, a: Fraction) -> Fraction:
    """(alpha - 1) prod_{k=2}^{d-2} (k - alpha) for an internal vertex of degree d."""
    w = a - 1
    for k in range(2, d - 1):
        w *= k - a
    return w


def _internal_degrees(node):
    if _is_leaf(node):
        return
    yield len(node) + 1
    for c in node:
        yield from _internal_degrees(c)


def labelled_probability(node, p: int, a: Fraction) -> Fraction:
    """Closed-form probability of one leaf-labelled tree with this shape."""
    num = Fraction(1)
    for d in _internal_degrees(node):
        num *= degree_weight(d, a)
    den = Fraction(1)
    for k in range(1, p):
        den *= k * a - 1
    return num / den


def formula_shape_law(alpha, p: int, cap: int = ENUM_CAP) -> ShapeTable:
    """Closed-form law over unlabelled shapes: labelled mass times p!/|Aut|."""
    _check_p(p, cap)
    a = exact_alpha(alpha)
    probs = {}
    for sub in _shapes(p):
        count = Fraction(math.factorial(p), automorphisms(sub))
        pr = count * labelled_probability(sub, p, a)
        if pr:
            probs[signature((sub,))] = pr
    return ShapeTable(a, p, probs)


def labelled_trees(p: int) -> list:
    """Every leaf-labelled shape with p leaves, as root tuples."""
    out = []

    def label(node, labels):
        if _is_leaf(node):
            yield labels[0], labels[1:]
            return
        # assign labels child by child over all splits
        yield from _label_children(list(node), labels)

    def _label_children(children, labels):
        if not children:
            yield (), labels
            return
        first, rest = children[0], children[1:]
        for lab_first, remaining in label(first, labels):
            for lab_rest, rem2 in _label_children(rest, remaining):
                yield (lab_first,) + lab_rest, rem2

    from itertools import permutations
    seen = set()
    for sub in _shapes(p):
        for perm in permutations(range(1, p + 1)):
            for t, _ in label(sub, perm):
                t = _relabel_canon(t)
                if t not in seen:
                    seen.add(t)
                    out.append((t,))
    return out


def _relabel_canon(node):
    if _is_leaf(node):
        return node
    return _canon(_relabel_canon(c) for c in node)
