"""Line-breaking growth of stable trees and the discrete shape algorithms.

Random draws are taken in a fixed order so that every run is replayable from
``(seed, stream)``:

1. the chain M_1, ..., M_p as one trajectory (backward factors, then the
   tail term; independent factors for the normalized variants),
2. the glue fractions B_1, ..., B_{p-1} as one block,
3. the edge/vertex selector uniforms as one block,
4. per round, the draws that locate the gluing point or vertex.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .chain import chain_values, normalized_chain
from .distributions import DEFAULT_N_TRUNC
from .errors import ParameterError
from .params import AlphaParam, as_alpha
from .rng import RngStream
from .rtree import WeightedRTree, new_segment, shape_code


class Algorithm(str, enum.Enum):
    I = "I"
    II = "II"
    ALDOUS = "ALDOUS"
    NORMALIZED_I = "NORMALIZED_I"
    NORMALIZED_II = "NORMALIZED_II"
    MARCHAL = "MARCHAL"
    REMY = "REMY"

    @classmethod
    def parse(cls, name: "str | Algorithm") -> "Algorithm":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        aliases = {"1": "I", "2": "II", "NORM_I": "NORMALIZED_I", "NORM_II": "NORMALIZED_II"}
        return cls(aliases.get(key, key))


@dataclass
class GrowthConfig:
    alpha: float
    p_target: int
    algorithm: Algorithm = Algorithm.I
    seed: int = 0
    stream: int = 0
    n_trunc: int = DEFAULT_N_TRUNC
    weight_tracking: bool = False
    snapshots: tuple[int, ...] = ()
    trace: bool = False
    aldous_intensity: float = 1.0

    def __post_init__(self) -> None:
        self.algorithm = Algorithm.parse(self.algorithm)
        ap = AlphaParam(self.alpha)
        if self.p_target < 1:
            raise ParameterError(f"p_target must be >= 1, got {self.p_target}")
        if self.algorithm in (Algorithm.ALDOUS, Algorithm.REMY) and not ap.is_brownian:
            raise ParameterError(f"{self.algorithm.value} requires alpha = 2")
        if self.algorithm in (Algorithm.II, Algorithm.NORMALIZED_II):
            self.weight_tracking = True
        if any(not 1 <= s <= self.p_target for s in self.snapshots):
            raise ParameterError("snapshot indices must lie in 1..p_target")
        self.snapshots = tuple(sorted(set(self.snapshots)))


@dataclass
class TraceRow:
    p: int
    m_p: float
    m_next: float
    b: float
    branch_length: float
    leftover: float
    kind: str
    host: int


@dataclass
class GrowthResult:
    tree: WeightedRTree
    m: list[float]
    trace: list[TraceRow] | None = None
    snapshots: dict[int, WeightedRTree] = field(default_factory=dict)
    shapes: list[str] | None = None

    @property
    def p(self) -> int:
        return self.tree.n_leaves


def _block_glue_fractions(ap: AlphaParam, n: int, g: np.random.Generator) -> np.ndarray:
    if ap.is_brownian:
        return np.ones(n)
    # values that round to 1.0 are kept; only underflow to 0 is redrawn
    x = g.beta(1.0, ap.b_shape, n)
    bad = x <= 0.0
    while bad.any():
        x[bad] = g.beta(1.0, ap.b_shape, int(bad.sum()))
        bad = x <= 0.0
    return x


def _grow_linebreaking(config: GrowthConfig, rng: RngStream, callback=None) -> GrowthResult:
    ap = AlphaParam(config.alpha)
    algo = config.algorithm
    by_mass = algo in (Algorithm.II, Algorithm.NORMALIZED_II)
    normalized = algo in (Algorithm.NORMALIZED_I, Algorithm.NORMALIZED_II)
    g = rng.generator
    p_target = config.p_target

    if normalized:
        chain = normalized_chain(ap, p_target, rng)
    else:
        chain = chain_values(ap, p_target, rng, config.n_trunc)
    m1 = chain[0]
    n = p_target - 1
    bs = _block_glue_fractions(ap, n, g).tolist()
    sel = g.random(n).tolist()

    capacity = 2 * p_target + 2
    tree = new_segment(m1, weight_tracking=config.weight_tracking,
                       alpha=None if by_mass else ap, capacity=capacity)
    ms = chain
    trace = [] if config.trace else None
    snaps = {}
    if 1 in config.snapshots:
        snaps[1] = tree.copy()

    brownian = ap.is_brownian
    for i in range(n):
        p = i + 1
        m = chain[i]
        m_next = chain[i + 1]
        dm = m_next - m
        b = bs[i]
        branch = dm * b
        leftover = dm * (1.0 - b)
        if brownian or sel[i] * m < tree.total_length or (by_mass and not tree.weight_sum > 0):
            point = tree.sample_skeleton_point(rng)
            host = point.edge
            leaf = tree.glue_at_point(point, branch)
            kind = "edge"
            if by_mass:
                tree.add_vertex_weight(tree.parent[leaf], leftover)
        else:
            host = tree.sample_weighted_vertex(rng) if by_mass else tree.sample_selection_vertex(rng)
            tree.glue_at_vertex(host, branch)
            kind = "vertex"
            if by_mass:
                tree.add_vertex_weight(host, leftover)
        if trace is not None:
            trace.append(TraceRow(p, m, m_next, b, branch, leftover, kind, host))
        if callback is not None:
            callback(p + 1, tree, m_next)
        if p + 1 in config.snapshots:
            snaps[p + 1] = tree.copy()
    return GrowthResult(tree, ms, trace, snaps)


def grow_algorithm_I(config: GrowthConfig, rng: RngStream | None = None) -> GrowthResult:
    """Edges chosen with probability L_p/M_p, vertices by degree."""
    if config.algorithm not in (Algorithm.I, Algorithm.NORMALIZED_I):
        config = _with_algorithm(config, Algorithm.I)
    return _grow_linebreaking(config, rng or RngStream(config.seed, config.stream))


def grow_algorithm_II(config: GrowthConfig, rng: RngStream | None = None) -> GrowthResult:
    """Edges chosen with probability L_p/M_p, vertices by accumulated mass W_v/M_p."""
    if config.algorithm not in (Algorithm.II, Algorithm.NORMALIZED_II):
        config = _with_algorithm(config, Algorithm.II)
    return _grow_linebreaking(config, rng or RngStream(config.seed, config.stream))


def grow_normalized(config: GrowthConfig, rng: RngStream | None = None) -> GrowthResult:
    """Same gluing rules driven by the normalized chain; the first segment has length 1."""
    if config.algorithm not in (Algorithm.NORMALIZED_I, Algorithm.NORMALIZED_II):
        raise ParameterError("grow_normalized needs NORMALIZED_I or NORMALIZED_II")
    return _grow_linebreaking(config, rng or RngStream(config.seed, config.stream))


def _with_algorithm(config: GrowthConfig, algo: Algorithm) -> GrowthConfig:
    return GrowthConfig(config.alpha, config.p_target, algo, config.seed, config.stream,
                        config.n_trunc, config.weight_tracking, config.snapshots,
                        config.trace, config.aldous_intensity)


def aldous_cut_points(p: int, rng: RngStream, intensity: float = 1.0, size=None):
    """First p points of a Poisson process on R_+ with intensity ``intensity * t dt``."""
    if not intensity > 0:
        raise ParameterError(f"intensity must be positive, got {intensity}")
    g = rng.generator
    shape = (p,) if size is None else (size, p)
    gam = np.cumsum(g.standard_exponential(shape), axis=-1)
    return np.sqrt(2.0 * gam / intensity)


def grow_aldous(p_target: int, rng: RngStream, intensity: float = 1.0,
                snapshots=(), trace: bool = False) -> GrowthResult:
    """Aldous' construction: branch lengths R_p - R_{p-1}, always glued uniformly."""
    if p_target < 1:
        raise ParameterError(f"p_target must be >= 1, got {p_target}")
    r = aldous_cut_points(p_target, rng, intensity).tolist()
    tree = new_segment(r[0], capacity=2 * p_target + 2)
    rows = [] if trace else None
    snaps = {1: tree.copy()} if 1 in snapshots else {}
    for i in range(1, p_target):
        s = r[i] - r[i - 1]
        point = tree.sample_skeleton_point(rng)
        tree.glue_at_point(point, s)
        if rows is not None:
            rows.append(TraceRow(i, r[i - 1], r[i], 1.0, s, 0.0, "edge", point.edge))
        if i + 1 in snapshots:
            snaps[i + 1] = tree.copy()
    return GrowthResult(tree, r, rows, snaps)


def grow_marchal(alpha: AlphaParam | float, p_target: int, rng: RngStream,
                 record_shapes: bool = True, snapshots=()) -> GrowthResult:
    """Discrete growth: edges weigh alpha - 1, a degree-d vertex weighs d - 1 - alpha.

    At alpha = 2 this is Remy's algorithm. All edge lengths are 1; only the
    shapes carry meaning.
    """
    ap = as_alpha(alpha)
    if p_target < 1:
        raise ParameterError(f"p_target must be >= 1, got {p_target}")
    a = ap.alpha
    g = rng.generator
    tree = new_segment(1.0, alpha=ap, capacity=2 * p_target + 2)
    shapes = [shape_code(tree.children())] if record_shapes else None
    snaps = {1: tree.copy()} if 1 in snapshots else {}
    for p in range(1, p_target):
        total = p * a - 1.0
        edge_w = tree.n_edges * (a - 1.0)
        vertex_w = tree.selection.total() if tree.selection is not None else 0.0
        if abs(edge_w + vertex_w - total) > 1e-9 * total:
            raise AssertionError(f"Marchal weights sum to {edge_w + vertex_w}, expected {total}")
        u = g.random() * total
        if u < edge_w or vertex_w <= 0.0:
            e = min(int(u / (a - 1.0)), tree.n_edges - 1)
            tree.split_edge(e, 1.0, 1.0, 1.0)
        else:
            tree.glue_at_vertex(tree.sample_selection_vertex(rng), 1.0)
        if shapes is not None:
            shapes.append(shape_code(tree.children()))
        if p + 1 in snapshots:
            snaps[p + 1] = tree.copy()
    return GrowthResult(tree, [], None, snaps, shapes)


def grow_remy(p_target: int, rng: RngStream, record_shapes: bool = True) -> GrowthResult:
    return grow_marchal(2.0, p_target, rng, record_shapes)


def grow(config: GrowthConfig, rng: RngStream | None = None, callback=None) -> GrowthResult:
    """Dispatch on ``config.algorithm``.

    ``callback(p, tree, m_p)`` runs after every line-breaking round.
    """
    rng = rng or RngStream(config.seed, config.stream)
    algo = config.algorithm
    if algo in (Algorithm.I, Algorithm.II, Algorithm.NORMALIZED_I, Algorithm.NORMALIZED_II):
        return _grow_linebreaking(config, rng, callback)
    if algo is Algorithm.ALDOUS:
        return grow_aldous(config.p_target, rng, config.aldous_intensity, config.snapshots, config.trace)
    if algo is Algorithm.MARCHAL:
        return grow_marchal(config.alpha, config.p_target, rng, False, config.snapshots)
    return grow_marchal(2.0, config.p_target, rng, False, config.snapshots)


def write_trace_csv(rows: list[TraceRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["p", "M_p", "B", "kind", "host", "branch_length"])
    for r in rows:
        w.writerow([r.p, repr(r.m_p), repr(r.b), r.kind, r.host, repr(r.branch_length)])
