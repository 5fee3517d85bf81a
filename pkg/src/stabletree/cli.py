"""Command-line front end: sample, chain, verify, bench, replay.

Exit codes: 0 success, 1 failure (runtime error or failed verdict), 2 usage.
Every command writes a JSON run manifest next to its main output.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import resource
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .chain import chain_values
from .distributions import DEFAULT_N_TRUNC
from .errors import ParameterError
from .io import FORMATS, atomic_write, write_tree
from .linebreaking import Algorithm, GrowthConfig, grow, write_trace_csv
from .rng import RngStream
from .rtree import selection_identity


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    versions: dict = field(default_factory=lambda: {
        "stabletree": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "scipy": scipy.__version__})
    started: str = ""
    finished: str = ""
    outputs: list[str] = field(default_factory=list)
    env: dict = field(default_factory=lambda: {"significance": _significance()})

    def write(self, path) -> None:
        atomic_write(path, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _significance() -> float:
    from .verify.stats import SIGNIFICANCE
    return SIGNIFICANCE


def argv_from_manifest(doc: dict) -> list[str]:
    """Rebuild the command line recorded in a manifest."""
    argv = [doc["command"]]
    for key, value in doc["config"].items():
        if key == "command" or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _positive_int(text: str) -> int:
    v = int(float(text))
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


# ------------------------------------------------------------------ sample
def cmd_sample(args) -> int:
    try:
        cfg = GrowthConfig(args.alpha, args.leaves, Algorithm.parse(args.algorithm), seed=args.seed,
                           n_trunc=args.n_trunc, snapshots=tuple(args.snapshots or ()),
                           trace=args.trace is not None, aldous_intensity=args.intensity)
    except (ParameterError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    manifest = RunManifest("sample", _echo(args), args.seed, started=_now())
    res = grow(cfg)
    out = Path(args.out)
    write_tree(res.tree, out, args.format, alpha=args.alpha, seed=args.seed)
    manifest.outputs.append(str(out))
    for q, snap in sorted(res.snapshots.items()):
        path = out.with_name(f"{out.stem}.p{q}{out.suffix or FORMATS[args.format][0]}")
        write_tree(snap, path, args.format, alpha=args.alpha, seed=args.seed)
        manifest.outputs.append(str(path))
    if args.trace is not None and res.trace is not None:
        import io

        buf = io.StringIO()
        write_trace_csv(res.trace, buf)
        atomic_write(args.trace, buf.getvalue())
        manifest.outputs.append(str(args.trace))
    manifest.finished = _now()
    manifest.write(_manifest_path(out))
    print(f"wrote {len(manifest.outputs)} file(s); leaves={res.tree.n_leaves} total_length={res.tree.total_length!r}")
    return 0


# ------------------------------------------------------------------- chain
def chain_csv(values) -> str:
    lines = ["p,M_p"] + [f"{p},{m!r}" for p, m in enumerate(values, start=1)]
    return "\n".join(lines) + "\n"


def read_chain_csv(path) -> np.ndarray:
    rows = Path(path).read_text().splitlines()[1:]
    return np.array([float(r.split(",")[1]) for r in rows if r])


def cmd_chain(args) -> int:
    try:
        values = chain_values(args.alpha, args.steps, RngStream(args.seed), args.n_trunc)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    manifest = RunManifest("chain", _echo(args), args.seed, started=_now())
    atomic_write(out, chain_csv(values))
    manifest.outputs.append(str(out))
    manifest.finished = _now()
    manifest.write(_manifest_path(out))
    print(f"wrote {len(values)} rows to {out}")
    return 0


# ------------------------------------------------------------------ verify
def cmd_verify(args) -> int:
    from .verify.stats import INCONCLUSIVE, write_jsonl
    from .verify.suites import exit_code, run_suite, summarize

    manifest = RunManifest("verify", _echo(args), args.seed, started=_now())
    quiet = args.quiet

    def show(r):
        if not quiet:
            print(r.line(), flush=True)

    reports = run_suite(args.suite, tuple(args.alpha_list), args.n, args.seed, progress=show)
    if args.report:
        import io

        buf = io.StringIO()
        write_jsonl(reports, buf)
        atomic_write(args.report, buf.getvalue())
        manifest.outputs.append(str(args.report))
        manifest.finished = _now()
        manifest.write(_manifest_path(Path(args.report)))
    counts = summarize(reports)
    print(f"{len(reports)} tests: {counts['pass']} pass, {counts['fail']} fail, {counts['inconclusive']} inconclusive")
    if counts.get(INCONCLUSIVE):
        print("warning: some tests were inconclusive", file=sys.stderr)
    return exit_code(reports)


# ------------------------------------------------------------------- bench
def structural_audit(tree, alpha: float, m_p: float | None = None) -> dict:
    """Run the full validator plus the closed-form identities; raise on failure."""
    tree.validate()
    p = tree.n_leaves
    out = {"validate": True}
    if alpha < 2 and p >= 2:
        census = math.fsum((d - 1 - alpha) * c for d, c in tree.census.items())
        target = selection_identity(p, tree.size, alpha)
        rel = abs(census - target) / (p * alpha - 1)
        if rel > 1e-10:
            raise AssertionError(f"degree identity off by {rel:.3g}")
        out["degree_identity_rel"] = rel
    if tree.size > 3 + 2 * (p - 2) and p >= 2:
        raise AssertionError("|T_p| bound violated")
    out["fenwick_drift"] = tree.lengths.max_drift()
    if m_p is not None:
        out["length_over_mass"] = tree.total_length / m_p
    return out


def _peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def selection_timing(alpha: float, sizes, seed: int, draws: int = 20_000) -> list[dict]:
    """Seconds per uniform skeleton-point draw on trees of increasing size."""
    rows = []
    for p in sizes:
        tree = grow(GrowthConfig(alpha, p, Algorithm.I, seed=seed)).tree
        rng = RngStream(seed, 1)
        t0 = time.perf_counter()
        for _ in range(draws):
            tree.sample_skeleton_point(rng)
        rows.append({"leaves": p, "edges": tree.n_edges,
                     "seconds_per_draw": (time.perf_counter() - t0) / draws})
    return rows


def log_fit(rows) -> dict:
    """Least-squares slopes of draw time against log2(edges) and log(edges)."""
    x = np.log2([r["edges"] for r in rows])
    y = np.array([r["seconds_per_draw"] for r in rows])
    slope_log2 = float(np.polyfit(x, y, 1)[0])
    power = float(np.polyfit(np.log(2) * x, np.log(y), 1)[0])
    return {"seconds_per_doubling": slope_log2, "power_law_exponent": power}


def cmd_bench(args) -> int:
    manifest = RunManifest("bench", _echo(args), args.seed, started=_now())
    cfg = GrowthConfig(args.alpha, args.leaves, Algorithm.parse(args.algorithm), seed=args.seed,
                       n_trunc=args.n_trunc)
    t0 = time.perf_counter()
    res = grow(cfg)
    wall = time.perf_counter() - t0
    m_p = res.m[-1] if res.m else None
    audit = structural_audit(res.tree, args.alpha, m_p)
    rounds = max(args.leaves - 1, 1)
    summary = {
        "alpha": args.alpha, "leaves": args.leaves, "algorithm": cfg.algorithm.value, "seed": args.seed,
        "wall_seconds": wall, "rounds_per_second": rounds / wall if wall > 0 else math.inf,
        "peak_rss_mb": _peak_rss_mb(), "edges": res.tree.n_edges, "invariants": audit,
    }
    if args.doubling:
        sizes = [s for s in args.doubling if s <= max(args.leaves, max(args.doubling))]
        rows = selection_timing(args.alpha, sizes, args.seed)
        summary["selection_timing"] = rows
        summary["selection_fit"] = log_fit(rows) if len(rows) >= 2 else {}
    text = json.dumps(summary, indent=2, sort_keys=True, default=float)
    print(text)
    if args.out:
        atomic_write(args.out, text + "\n")
        manifest.outputs.append(str(args.out))
        manifest.finished = _now()
        manifest.write(_manifest_path(Path(args.out)))
    return 0


# ------------------------------------------------------------------ replay
def cmd_replay(args) -> int:
    try:
        doc = json.loads(Path(args.manifest).read_text())
        argv = argv_from_manifest(doc)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    recorded = doc.get("env", {}).get("significance")
    if recorded is not None and recorded != _significance():
        raise UsageError(f"manifest was run at significance {recorded}; set STABLETREE_SIGNIFICANCE={recorded}")
    print("replaying: stabletree " + " ".join(argv), file=sys.stderr)
    sub = build_parser().parse_args(argv)
    return sub.func(sub)


# ------------------------------------------------------------------ parser
def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabletree", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="grow one tree and export it")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--leaves", type=_positive_int, required=True)
    s.add_argument("--algorithm", default="I", type=str.upper,
                   choices=[a.value for a in Algorithm])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=sorted(FORMATS), default="json")
    s.add_argument("--snapshots", type=_int_list, default=None, help="comma-separated leaf counts")
    s.add_argument("--n-trunc", type=_positive_int, default=DEFAULT_N_TRUNC)
    s.add_argument("--intensity", type=float, default=1.0, help="Aldous cut-point intensity constant")
    s.add_argument("--trace", default=None, help="also write the per-round trace CSV here")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("chain", help="write one chain trajectory as CSV (p, M_p)")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--steps", type=_positive_int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--n-trunc", type=_positive_int, default=DEFAULT_N_TRUNC)
    c.set_defaults(func=cmd_chain)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all",
                   choices=["shapes", "lengths", "mixture", "dirichlet", "brownian", "ledgers", "all"])
    v.add_argument("--alpha-list", type=_float_list, default=[1.5])
    v.add_argument("--n", type=_positive_int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--report", default=None)
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time one growth run and audit the result")
    b.add_argument("--alpha", type=float, default=1.5)
    b.add_argument("--leaves", type=_positive_int, default=100_000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--algorithm", default="I", type=str.upper, choices=["I", "II", "NORMALIZED_I", "NORMALIZED_II"])
    b.add_argument("--n-trunc", type=_positive_int, default=DEFAULT_N_TRUNC)
    b.add_argument("--doubling", type=_int_list, default=None,
                   help="leaf counts for the selection-time regression, e.g. 1000,2000,4000")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stabletree: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"stabletree: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
