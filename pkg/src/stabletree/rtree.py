"""Rooted trees with edge lengths and internal-vertex weights.

Vertex 0 is the root and always has degree 1. Every other vertex has one
parent edge. Edges live in a dense array indexed by edge id; when an edge is
split, the rootward fragment keeps the edge id and the leafward fragment is
appended. A Fenwick index over edge lengths gives O(log n) uniform sampling
on the skeleton; optional Fenwick indices over vertices serve degree-based
and mass-based vertex selection.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StateError, StructuralError
from .fenwick import Fenwick
from .params import AlphaParam, as_alpha
from .rng import RngStream

ROOT = 0


@dataclass(frozen=True)
class SkeletonPoint:
    """A point strictly inside edge ``edge``, ``offset`` away from its rootward end.

    ``length`` records the edge length at sampling time so that a point taken
    before the edge was split is detected as stale.
    """

    edge: int
    offset: float
    length: float


class WeightedRTree:
    def __init__(self, length: float, weight_tracking: bool = False,
                 alpha: AlphaParam | float | None = None, capacity: int = 16):
        if not length > 0:
            raise DomainError(f"segment length must be positive, got {length}")
        # vertices
        self.parent: list[int] = [-1, ROOT]
        self.parent_edge: list[int] = [-1, 0]
        self.degree: list[int] = [1, 1]
        self.leaf_label: list[int] = [0, 1]
        self.weight: list[float] = [0.0, 0.0]
        self.leaves: list[int] = [1]
        # edges
        self.e_upper: list[int] = [ROOT]
        self.e_lower: list[int] = [1]
        self.lengths = Fenwick([float(length)], capacity)
        self.total_length = float(length)
        self.weight_tracking = weight_tracking
        self.weights: Fenwick | None = Fenwick((0.0, 0.0), capacity) if weight_tracking else None
        self.weight_sum = 0.0
        self.alpha = None if alpha is None else as_alpha(alpha)
        self.selection: Fenwick | None = None
        if self.alpha is not None and not self.alpha.is_brownian:
            self.selection = Fenwick((0.0, 0.0), capacity)
        self.census: Counter[int] = Counter()

    # ------------------------------------------------------------------ sizes
    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def n_edges(self) -> int:
        return len(self.e_upper)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def size(self) -> int:
        """|T|: number of non-root vertices, equal to the number of edges."""
        return len(self.parent) - 1

    def edge_length(self, e: int) -> float:
        return self.lengths[e]

    def is_internal(self, v: int) -> bool:
        return v != ROOT and self.degree[v] >= 3

    def internal_vertices(self) -> list[int]:
        return [v for v in range(1, self.n_vertices) if self.degree[v] >= 3]

    # -------------------------------------------------------------- building
    def _new_vertex(self, parent: int, parent_edge: int, degree: int, label: int) -> int:
        v = len(self.parent)
        self.parent.append(parent)
        self.parent_edge.append(parent_edge)
        self.degree.append(degree)
        self.leaf_label.append(label)
        self.weight.append(0.0)
        if self.weights is not None:
            self.weights.append(0.0)
        if self.selection is not None:
            self.selection.append(0.0)
        return v

    def _new_leaf(self, parent: int, branch_length: float) -> int:
        e = len(self.e_upper)
        label = len(self.leaves) + 1
        leaf = self._new_vertex(parent, e, 1, label)
        self.e_upper.append(parent)
        self.e_lower.append(leaf)
        self.lengths.append(branch_length)
        self.leaves.append(leaf)
        self.total_length += branch_length
        return leaf

    def split_edge(self, e: int, upper: float, lower: float, branch_length: float) -> int:
        """Split edge ``e`` into lengths (upper, lower) and hang a new leaf at the cut.

        Returns the new leaf vertex. The rootward piece keeps id ``e``.
        """
        if not (upper > 0 and lower > 0 and branch_length > 0):
            raise DomainError("split lengths and branch length must be positive")
        u, v = self.e_upper[e], self.e_lower[e]
        w = self._new_vertex(u, e, 3, 0)
        self.census[3] += 1
        if self.selection is not None:
            self.selection.set(w, 2.0 - self.alpha.alpha)
        old = self.lengths[e]
        self.lengths.set(e, upper)
        self.e_lower[e] = w
        e2 = len(self.e_upper)
        self.e_upper.append(w)
        self.e_lower.append(v)
        self.lengths.append(lower)
        self.parent[v] = w
        self.parent_edge[v] = e2
        self.total_length += (upper + lower) - old
        return self._new_leaf(w, branch_length)

    def glue_at_point(self, point: SkeletonPoint, branch_length: float) -> int:
        e = point.edge
        if not 0 <= e < self.n_edges or self.lengths[e] != point.length:
            raise StructuralError(f"stale or invalid skeleton point {point}")
        if not 0.0 < point.offset < point.length:
            raise StructuralError(f"offset {point.offset} not inside edge of length {point.length}")
        if not branch_length > 0:
            raise DomainError(f"branch length must be positive, got {branch_length}")
        # keep the host total exact: the leafward piece is the remainder
        return self.split_edge(e, point.offset, point.length - point.offset, branch_length)

    def glue_at_vertex(self, v: int, branch_length: float) -> int:
        if not 0 < v < self.n_vertices or self.degree[v] < 3:
            raise DomainError(f"vertex {v} is not internal; only degree >= 3 vertices can be selected")
        if not branch_length > 0:
            raise DomainError(f"branch length must be positive, got {branch_length}")
        d = self.degree[v]
        self.degree[v] = d + 1
        self.census[d] -= 1
        if not self.census[d]:
            del self.census[d]
        self.census[d + 1] += 1
        if self.selection is not None:
            self.selection.add(v, 1.0)
        return self._new_leaf(v, branch_length)

    def add_vertex_weight(self, v: int, delta: float) -> None:
        if self.weights is None:
            raise StateError("weight tracking is disabled on this tree")
        if not self.is_internal(v):
            raise DomainError(f"vertex {v} is not internal")
        if not delta >= 0:
            raise DomainError(f"weight increment must be nonnegative, got {delta}")
        self.weight[v] += delta
        self.weights.set(v, self.weight[v])
        self.weight_sum += delta

    # -------------------------------------------------------------- sampling
    def sample_skeleton_point(self, rng: RngStream) -> SkeletonPoint:
        g = rng.generator
        lengths = self.lengths
        n = lengths._n
        while True:
            total = lengths.total()
            e, off = lengths.find(g.random() * total)
            if e < n:
                ell = lengths[e]
                if 0.0 < off < ell:
                    return SkeletonPoint(e, off, ell)

    def sample_selection_vertex(self, rng: RngStream) -> int:
        """Internal vertex v with probability proportional to d_v - 1 - alpha."""
        if self.selection is None:
            raise StateError("degree-based selection needs alpha in (1, 2)")
        return self._sample_vertex(self.selection, rng)

    def sample_weighted_vertex(self, rng: RngStream) -> int:
        """Internal vertex v with probability proportional to its weight W_v."""
        if self.weights is None:
            raise StateError("weight tracking is disabled on this tree")
        return self._sample_vertex(self.weights, rng)

    def _sample_vertex(self, index: Fenwick, rng: RngStream) -> int:
        g = rng.generator
        total = index.total()
        if not total > 0:
            raise StateError("no vertex carries positive selection weight")
        while True:
            v, _ = index.find(g.random() * total)
            if v < len(index) and index[v] > 0:
                return v

    # ------------------------------------------------------------ structure
    def children(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in range(self.n_vertices)]
        parent = self.parent
        for v in range(1, self.n_vertices):
            ch[parent[v]].append(v)
        return ch

    def depths(self) -> list[float]:
        """Distance from the root to each vertex."""
        n = self.n_vertices
        depth = [0.0] * n
        order = self._preorder()
        parent, pe, vals = self.parent, self.parent_edge, self.lengths.values
        for v in order[1:]:
            depth[v] = depth[parent[v]] + vals[pe[v]]
        return depth

    def _preorder(self) -> list[int]:
        ch = self.children()
        order = []
        stack = [ROOT]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(ch[v])
        return order

    def leaf_vertex(self, label: int) -> int:
        return self.leaves[label - 1]

    def copy(self) -> "WeightedRTree":
        new = object.__new__(WeightedRTree)
        new.parent = self.parent.copy()
        new.parent_edge = self.parent_edge.copy()
        new.degree = self.degree.copy()
        new.leaf_label = self.leaf_label.copy()
        new.weight = self.weight.copy()
        new.leaves = self.leaves.copy()
        new.e_upper = self.e_upper.copy()
        new.e_lower = self.e_lower.copy()
        new.lengths = Fenwick(self.lengths.values, len(self.lengths))
        new.total_length = self.total_length
        new.weight_tracking = self.weight_tracking
        new.weights = None if self.weights is None else Fenwick(self.weights.values, len(self.weights))
        new.weight_sum = self.weight_sum
        new.alpha = self.alpha
        new.selection = None if self.selection is None else Fenwick(self.selection.values, len(self.selection))
        new.census = Counter(self.census)
        return new

    def validate(self, rel_tol: float = 1e-12) -> None:
        """Recompute every structural invariant from scratch; raise on failure."""
        n = self.n_vertices
        ch = self.children()
        if self.degree[ROOT] != 1 or len(ch[ROOT]) != 1:
            raise StructuralError("root must have degree exactly 1")
        for v in range(1, n):
            d = len(ch[v]) + 1
            if d != self.degree[v]:
                raise StructuralError(f"degree bookkeeping wrong at vertex {v}")
            if d == 2:
                raise StructuralError(f"vertex {v} has degree 2")
            if (d == 1) != (self.leaf_label[v] > 0):
                raise StructuralError(f"leaf labelling wrong at vertex {v}")
            e = self.parent_edge[v]
            if self.e_lower[e] != v or self.e_upper[e] != self.parent[v]:
                raise StructuralError(f"edge table inconsistent at vertex {v}")
        if self.n_edges != n - 1:
            raise StructuralError("edge count must equal |T|")
        vals = self.lengths.values
        if min(vals) <= 0:
            raise StructuralError("non-positive edge length")
        exact = math.fsum(vals)
        if abs(exact - self.total_length) > rel_tol * exact:
            raise StructuralError(f"running total {self.total_length} != {exact}")
        if abs(self.lengths.total() - exact) > rel_tol * exact:
            raise StructuralError("Fenwick total disagrees with the edge lengths")
        if self.lengths.max_drift() > rel_tol * exact:
            raise StructuralError("Fenwick internal sums drifted")
        labels = [self.leaf_label[v] for v in self.leaves]
        if labels != list(range(1, len(self.leaves) + 1)):
            raise StructuralError("leaf labels are not 1..p in order of appearance")
        census = Counter(self.degree[v] for v in range(1, n) if self.degree[v] >= 3)
        if census != +self.census:
            raise StructuralError("degree census out of date")
        if self.size != 1 and self.size > 3 + 2 * (self.n_leaves - 2):
            raise StructuralError("|T_p| exceeds 3 + 2(p - 2)")


def new_segment(length: float, weight_tracking: bool = False,
                alpha: AlphaParam | float | None = None, capacity: int = 16) -> WeightedRTree:
    return WeightedRTree(length, weight_tracking, alpha, capacity)


def sample_skeleton_point(tree: WeightedRTree, rng: RngStream) -> SkeletonPoint:
    return tree.sample_skeleton_point(rng)


def glue_at_point(tree: WeightedRTree, point: SkeletonPoint, branch_length: float) -> int:
    return tree.glue_at_point(point, branch_length)


def glue_at_vertex(tree: WeightedRTree, v: int, branch_length: float) -> int:
    return tree.glue_at_vertex(v, branch_length)


def add_vertex_weight(tree: WeightedRTree, v: int, delta: float) -> None:
    tree.add_vertex_weight(v, delta)


# ------------------------------------------------------------------ shapes
def shape_code(children: list[list[int]], root: int = ROOT) -> str:
    """AHU canonical code: a leaf is "()", a vertex wraps its sorted child codes."""
    code: dict[int, str] = {}
    stack = [(root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            code[v] = "(" + "".join(sorted(code.pop(c) for c in children[v])) + ")"
        else:
            stack.append((v, True))
            stack.extend((c, False) for c in children[v])
    return code[root]


def shape(tree: WeightedRTree) -> tuple[str, Counter]:
    """Canonical shape signature and the multiset of internal-vertex degrees."""
    return shape_code(tree.children()), +tree.census


def degree_census(tree: WeightedRTree) -> Counter:
    return Counter(tree.degree[v] for v in range(1, tree.n_vertices) if tree.degree[v] >= 3)


def vertex_selection_weight(tree: WeightedRTree, alpha: AlphaParam | float) -> tuple[dict[int, float], float]:
    """Per internal vertex d_v - 1 - alpha, and their sum (zero at alpha = 2)."""
    ap = as_alpha(alpha)
    if ap.is_brownian:
        return {v: 0.0 for v in tree.internal_vertices()}, 0.0
    w = {v: tree.degree[v] - 1 - ap.alpha for v in tree.internal_vertices()}
    return w, math.fsum(w.values())


def selection_identity(p: int, size: int, alpha: AlphaParam | float) -> float:
    """Closed form p alpha - 1 - |T_p| (alpha - 1) of the selection-weight total."""
    a = as_alpha(alpha).alpha
    return p * a - 1 - size * (a - 1)


# --------------------------------------------------------------- distances
def distance_matrix(tree: WeightedRTree) -> np.ndarray:
    """Geodesic distances among (root, leaf 1, ..., leaf p)."""
    depth = tree.depths()
    points = [ROOT] + tree.leaves
    k = len(points)
    parent = tree.parent
    out = np.zeros((k, k))
    for i in range(1, k):
        out[0, i] = out[i, 0] = depth[points[i]]
    for i in range(1, k):
        # ancestors of leaf i (including itself)
        anc = set()
        v = points[i]
        while v != -1:
            anc.add(v)
            v = parent[v]
        di = depth[points[i]]
        for j in range(i + 1, k):
            v = points[j]
            while v not in anc:
                v = parent[v]
            d = di + depth[points[j]] - 2.0 * depth[v]
            out[i, j] = out[j, i] = d
    return out


def four_point_violation(dist: np.ndarray) -> float:
    """Largest violation of the four-point condition over all quadruples."""
    k = dist.shape[0]
    worst = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            dab = dist[a, b]
            for c in range(b + 1, k):
                # vectorize over d
                dd = np.arange(c + 1, k)
                if dd.size == 0:
                    continue
                s1 = dab + dist[c, dd]
                s2 = dist[a, c] + dist[b, dd]
                s3 = dist[a, dd] + dist[b, c]
                s = np.sort(np.stack([s1, s2, s3]), axis=0)
                worst = max(worst, float(np.max(s[2] - s[1])))
    return worst
