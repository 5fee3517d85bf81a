"""Tree and table serialization: JSON, Newick and distance-matrix CSV.

Floats are written with ``repr`` so every format round-trips lengths exactly.
All writers go through :func:`atomic_write` (temp file in the target
directory, then rename).
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from collections import Counter
from pathlib import Path

from .errors import ParameterError, StructuralError
from .fenwick import Fenwick
from .params import as_alpha
from .rtree import ROOT, WeightedRTree, distance_matrix


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -------------------------------------------------------------- rebuilding
def tree_from_records(parent: list[int], parent_edge: list[int], lengths: list[float],
                      leaf_label: list[int], weight: list[float] | None = None,
                      alpha=None) -> WeightedRTree:
    """Assemble a tree from vertex arrays; vertex 0 is the root.

    ``lengths[e]`` is the length of edge ``e`` and ``parent_edge[v]`` the edge
    above ``v`` (ignored for the root).
    """
    n = len(parent)
    if n < 2 or parent[ROOT] != -1:
        raise StructuralError("need a root (parent -1) and at least one edge")
    if len(lengths) != n - 1:
        raise StructuralError("edge count must equal the number of non-root vertices")
    t = object.__new__(WeightedRTree)
    t.parent = list(parent)
    t.parent_edge = [-1] + list(parent_edge[1:])
    deg = [0] * n
    for v in range(1, n):
        deg[parent[v]] += 1
        deg[v] += 1
    t.degree = deg
    t.leaf_label = list(leaf_label)
    leaves = sorted((lab, v) for v, lab in enumerate(leaf_label) if lab > 0)
    t.leaves = [v for _, v in leaves]
    t.e_upper = [0] * (n - 1)
    t.e_lower = [0] * (n - 1)
    for v in range(1, n):
        e = t.parent_edge[v]
        t.e_upper[e] = parent[v]
        t.e_lower[e] = v
    cap = 2 * n + 2
    t.lengths = Fenwick([float(x) for x in lengths], cap)
    t.total_length = t.lengths.exact_total()
    t.weight_tracking = weight is not None
    t.weight = [float(x) for x in weight] if weight is not None else [0.0] * n
    t.weights = Fenwick(t.weight, cap) if weight is not None else None
    t.weight_sum = t.weights.exact_total() if weight is not None else 0.0
    t.alpha = None if alpha is None else as_alpha(alpha)
    t.selection = None
    if t.alpha is not None and not t.alpha.is_brownian:
        a = t.alpha.alpha
        t.selection = Fenwick([d - 1 - a if v and d >= 3 else 0.0 for v, d in enumerate(deg)], cap)
    t.census = Counter(d for v, d in enumerate(deg) if v and d >= 3)
    return t


# -------------------------------------------------------------------- JSON
def tree_to_dict(tree: WeightedRTree, alpha: float | None = None, seed: int | None = None) -> dict:
    lengths = tree.lengths.values
    verts = []
    for v in range(tree.n_vertices):
        rec = {"id": v, "parent": tree.parent[v]}
        if v != ROOT:
            rec["edge"] = tree.parent_edge[v]
            rec["length"] = lengths[tree.parent_edge[v]]
        else:
            rec["length"] = 0.0
        if tree.leaf_label[v]:
            rec["label"] = tree.leaf_label[v]
        if tree.weight_tracking:
            rec["weight"] = tree.weight[v]
        verts.append(rec)
    return {"alpha": alpha, "seed": seed, "vertices": verts, "leaf_order": list(tree.leaves)}


def tree_from_dict(doc: dict) -> WeightedRTree:
    verts = sorted(doc["vertices"], key=lambda r: r["id"])
    if [r["id"] for r in verts] != list(range(len(verts))):
        raise StructuralError("vertex ids must be 0..n-1")
    n = len(verts)
    parent = [r["parent"] for r in verts]
    pe = [-1] + [r.get("edge", v - 1) for v, r in enumerate(verts) if v]
    lengths = [0.0] * (n - 1)
    for v in range(1, n):
        lengths[pe[v]] = float(verts[v]["length"])
    labels = [0] * n
    for k, v in enumerate(doc["leaf_order"], start=1):
        labels[v] = k
    weight = [float(r.get("weight", 0.0)) for r in verts] if any("weight" in r for r in verts) else None
    return tree_from_records(parent, pe, lengths, labels, weight)


def dumps_json(tree: WeightedRTree, alpha: float | None = None, seed: int | None = None) -> str:
    return json.dumps(tree_to_dict(tree, alpha, seed), indent=None, separators=(",", ":")) + "\n"


def loads_json(text: str) -> WeightedRTree:
    return tree_from_dict(json.loads(text))


# ------------------------------------------------------------------ Newick
def dumps_newick(tree: WeightedRTree) -> str:
    """Newick string rooted at the tree root, labelled ``root``; leaves are L1..Lp."""
    ch = tree.children()
    lengths = tree.lengths.values
    out: list[str] = []
    stack: list[tuple[int, int]] = [(ROOT, 0)]
    while stack:
        v, state = stack.pop()
        kids = ch[v]
        if state == 0 and kids:
            out.append("(")
        if state < len(kids):
            if state > 0:
                out.append(",")
            stack.append((v, state + 1))
            stack.append((kids[state], 0))
            continue
        if kids:
            out.append(")")
        if v == ROOT:
            out.append("root")
        else:
            if tree.leaf_label[v]:
                out.append(f"L{tree.leaf_label[v]}")
            out.append(":" + repr(lengths[tree.parent_edge[v]]))
    return "".join(out) + ";\n"


_TOKEN = re.compile(r"\s*([(),;:]|[^(),;:\s]+)")


def loads_newick(text: str) -> WeightedRTree:
    """Parse what :func:`dumps_newick` writes. Leaf names must be L1..Lp."""
    tokens = _TOKEN.findall(text.strip())
    parent = [-1]
    lengths: list[float] = []
    labels = [0]
    stack = [ROOT]
    pending = ROOT   # last completed node, awaiting name / length

    def new_node() -> int:
        v = len(parent)
        parent.append(stack[-1])
        lengths.append(0.0)
        labels.append(0)
        return v

    # the outermost group belongs to the root
    if not tokens or tokens[0] != "(":
        raise StructuralError("Newick tree must start with the root's child list")
    i = 1
    expect_node = True
    while i < len(tokens):
        tok = tokens[i]
        if tok == "(":
            v = new_node()
            stack.append(v)
            expect_node = True
        elif tok == ",":
            expect_node = True
        elif tok == ")":
            if expect_node:
                raise StructuralError("empty child in Newick string")
            pending = stack.pop()
            expect_node = False
        elif tok == ":":
            i += 1
            if pending == ROOT:
                raise StructuralError("the root carries no branch length")
            lengths[pending - 1] = float(tokens[i])
        elif tok == ";":
            break
        else:
            if expect_node:
                pending = new_node()
                expect_node = False
            if pending == ROOT:
                if tok != "root":
                    raise StructuralError(f"unexpected root name {tok!r}")
            elif tok.startswith("L") and tok[1:].isdigit():
                labels[pending] = int(tok[1:])
            else:
                raise StructuralError(f"unexpected node name {tok!r}")
        i += 1
    if stack:
        raise StructuralError("unbalanced parentheses in Newick string")
    n = len(parent)
    # edges are numbered by the child's position in the file
    return tree_from_records(parent, list(range(-1, n - 1)), lengths, labels)


# ------------------------------------------------------------ distance CSV
def dumps_distmatrix(tree: WeightedRTree) -> str:
    dist = distance_matrix(tree)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["root"] + [f"L{k}" for k in range(1, tree.n_leaves + 1)])
    for row in dist:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def loads_distmatrix(text: str):
    import numpy as np

    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[0] != "root" or len(body) != len(header):
        raise ParameterError("distance CSV must be square with a root,L1..Lp header")
    return np.array([[float(x) for x in r] for r in body])


FORMATS = {
    "json": (".json", dumps_json),
    "newick": (".nwk", lambda tree, alpha=None, seed=None: dumps_newick(tree)),
    "distmatrix": (".csv", lambda tree, alpha=None, seed=None: dumps_distmatrix(tree)),
}


def write_tree(tree: WeightedRTree, path, fmt: str, alpha: float | None = None,
               seed: int | None = None) -> None:
    if fmt not in FORMATS:
        raise ParameterError(f"unknown format {fmt!r}")
    atomic_write(path, FORMATS[fmt][1](tree, alpha=alpha, seed=seed))


def read_tree(path, fmt: str | None = None) -> WeightedRTree:
    path = Path(path)
    text = path.read_text()
    if fmt is None:
        fmt = "json" if path.suffix == ".json" else "newick"
    if fmt == "json":
        return loads_json(text)
    if fmt == "newick":
        return loads_newick(text)
    raise ParameterError(f"cannot rebuild a tree from format {fmt!r}")
