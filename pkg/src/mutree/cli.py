"""Command-line interface: ``mutree {dist,consensus,gen,eval,embed}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from contextlib import nullcontext
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .consensus import METHODS, OBJECTIVES, DistanceCache, consensus_report, pairwise_distances
from .embed import classical_mds
from .newick import (
    IncompatibleCollectionError,
    NewickParseError,
    load_tree_set,
    parse_newick,
    write_tree_set,
)
from .oracle import InstanceSpec, random_instance
from .tree import IncomparableTreesError, MalformedTreeError, Tree

EXIT_FLAGS = 1
EXIT_PARSE = 2
EXIT_INCOMPARABLE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


@dataclass
class EvalRow:
    instance: int
    leaves: int
    method: str
    median_gap: float
    closest_gap: float
    seconds: float
    better_than_inputs: bool


def _read_trees(arg: str) -> list[Tree]:
    """A file of Newick lines, or a Newick string given inline."""
    p = Path(arg)
    if p.exists():
        return load_tree_set(p, strict=False)
    if arg.lstrip().startswith("("):
        return [parse_newick(arg, strict=False)]
    raise UsageError(f"no such file: {arg}")


def _out(path: str | None):
    return open(path, "w", encoding="utf-8", newline="") if path else nullcontext(sys.stdout)


def _matrix_csv(d: np.ndarray, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([""] + [f"T{i + 1}" for i in range(len(d))])
    for i, row in enumerate(d):
        w.writerow([f"T{i + 1}"] + [int(v) for v in row])


def cmd_dist(args) -> int:
    t0 = time.perf_counter()
    a = _read_trees(args.a)
    b = _read_trees(args.b) if args.b else []
    trees = a + b
    t1 = time.perf_counter()
    if args.matrix or (not b and len(a) > 2):
        d = pairwise_distances(trees)
        with _out(args.output) as fh:
            _matrix_csv(d, fh)
    else:
        if len(trees) != 2:
            raise UsageError("dist needs two trees, or --matrix for a collection")
        from .distance import tree_distance

        if trees[0].leaves != trees[1].leaves:
            raise IncomparableTreesError("trees have different leaf sets")
        r = tree_distance(trees[0], trees[1])
        with _out(args.output) as fh:
            print(r.value, file=fh)
            if args.emit_script:
                for m in r.script.steps:
                    print(m, file=fh)
    t2 = time.perf_counter()
    if args.timing:
        print(f"parse_ms={1000 * (t1 - t0):.3f} distance_ms={1000 * (t2 - t1):.3f}", file=sys.stderr)
    return 0


def cmd_consensus(args) -> int:
    t0 = time.perf_counter()
    trees = load_tree_set(args.input, strict=False)
    if not trees:
        raise UsageError("input holds no trees")
    t1 = time.perf_counter()
    rep = consensus_report(trees, args.method, args.objective)
    doc = rep.to_dict()
    doc["timings_ms"]["parse"] = round(1000 * (t1 - t0), 3)
    text = json.dumps(doc, indent=2)
    if args.output:
        Path(args.output).write_text(rep.candidate.newick + "\n", encoding="utf-8")
    else:
        print(rep.candidate.newick)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _spec_from(args, n: int, seed: int) -> InstanceSpec:
    if n < 2:
        raise UsageError("--leaves must be at least 2")
    if args.trees < 1:
        raise UsageError("--trees must be at least 1")
    if args.height_cap is not None and args.height_cap < 1:
        raise UsageError("--height-cap must be at least 1")
    return InstanceSpec(k=args.trees, n=n, height_cap=args.height_cap, seed=seed)


def cmd_gen(args) -> int:
    spec = _spec_from(args, args.leaves, args.seed)
    write_tree_set(args.output, random_instance(spec), header=[spec.header()])
    return 0


def eval_rows(leaves, trees, instances, seed, methods, height_cap=None) -> list[EvalRow]:
    rows = []
    for n in leaves:
        for i in range(instances):
            spec = InstanceSpec(k=trees, n=n, height_cap=height_cap, seed=seed + i)
            inst = random_instance(spec)
            cache = DistanceCache()
            for m in methods:
                rep = consensus_report(inst, m, "median", cache)
                rows.append(
                    EvalRow(
                        i, n, m, float(rep.median_gap), float(rep.closest_gap),
                        rep.timings["consensus"], rep.better_than_inputs,
                    )
                )
    return rows


def averages(rows: list[EvalRow]) -> list[dict]:
    """Per (method, leaves) means of the gaps and times."""
    out = []
    keys = sorted({(r.method, r.leaves) for r in rows}, key=lambda k: (METHODS.index(k[0]), k[1]))
    for m, n in keys:
        sel = [r for r in rows if r.method == m and r.leaves == n]
        out.append(
            {
                "method": m,
                "leaves": n,
                "instances": len(sel),
                "median": float(np.mean([r.median_gap for r in sel])),
                "closest": float(np.mean([r.closest_gap for r in sel])),
                "seconds": float(np.mean([r.seconds for r in sel])),
                "better_than_inputs": float(np.mean([r.better_than_inputs for r in sel])),
            }
        )
    return out


def format_averages(avg: list[dict]) -> str:
    lines = []
    for m in METHODS:
        sel = [a for a in avg if a["method"] == m]
        if not sel:
            continue
        lines.append(f"{m}")
        lines.append(f"{'# leaves':>9} {'Median':>8} {'Closest':>8} {'Time (s)':>9} {'Better':>7}")
        for a in sel:
            lines.append(
                f"{a['leaves']:>9d} {a['median']:>8.2f} {a['closest']:>8.2f} "
                f"{a['seconds']:>9.3f} {a['better_than_inputs']:>7.2f}"
            )
        lines.append("")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    if args.instances < 1:
        raise UsageError("--instances must be at least 1")
    for n in args.leaves:
        _spec_from(args, n, args.seed)
    rows = eval_rows(args.leaves, args.trees, args.instances, args.seed, args.methods, args.height_cap)
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(asdict(rows[0]).keys()))
        for r in rows:
            d = asdict(r)
            d["seconds"] = round(d["seconds"], 6)
            w.writerow(d.values())
    avg = averages(rows)
    if args.summary:
        Path(args.summary).write_text(json.dumps(avg, indent=2) + "\n", encoding="utf-8")
    print(format_averages(avg), file=sys.stderr if not args.output else sys.stdout)
    return 0


def cmd_embed(args) -> int:
    trees = load_tree_set(args.input, strict=False)
    kinds = ["input"] * len(trees)
    if args.candidates:
        extra = load_tree_set(args.candidates, strict=False)
        if extra and trees and extra[0].leaves != trees[0].leaves:
            raise IncomparableTreesError("candidates and inputs have different leaf sets")
        trees += extra
        kinds += ["candidate"] * len(extra)
    if not trees:
        raise UsageError("input holds no trees")
    d = pairwise_distances(trees)
    x, stress = classical_mds(d, 2)
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "kind", "x", "y"])
        counters = {"input": 0, "candidate": 0}
        for kind, (px, py) in zip(kinds, x):
            counters[kind] += 1
            prefix = "T" if kind == "input" else "C"
            w.writerow([f"{prefix}{counters[kind]}", kind, f"{px:.6f}", f"{py:.6f}"])
    print(f"stress={stress:.6f}", file=sys.stderr if not args.output else sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mutree", description="Distances and consensus for rooted mutation trees.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dist", help="distance between two trees, or a pairwise matrix")
    d.add_argument("a", help="tree file or inline Newick")
    d.add_argument("b", nargs="?", help="second tree file or inline Newick")
    d.add_argument("--emit-script", action="store_true", help="print the move script")
    d.add_argument("--matrix", action="store_true", help="pairwise CSV over all trees read")
    d.add_argument("--timing", action="store_true", help="phase timings on stderr")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_dist)

    c = sub.add_parser("consensus", help="consensus tree of a collection")
    c.add_argument("-i", "--input", required=True)
    c.add_argument("--method", choices=METHODS, default="mcat")
    c.add_argument("--objective", choices=OBJECTIVES, default="median")
    c.add_argument("-o", "--output", help="write the candidate tree here")
    c.add_argument("--report", help="write the JSON report here")
    c.set_defaults(func=cmd_consensus)

    g = sub.add_parser("gen", help="seeded random instance")
    g.add_argument("--leaves", type=int, required=True)
    g.add_argument("--trees", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--height-cap", type=int)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("eval", help="averages over seeded instances")
    e.add_argument("--instances", type=int, required=True)
    e.add_argument("--leaves", type=int, nargs="+", required=True)
    e.add_argument("--trees", type=int, required=True)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--height-cap", type=int)
    e.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    e.add_argument("-o", "--output", help="per-instance CSV")
    e.add_argument("--summary", help="averages as JSON")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("embed", help="2-D coordinates by classical MDS")
    m.add_argument("-i", "--input", required=True)
    m.add_argument("--candidates")
    m.add_argument("-o", "--output")
    m.set_defaults(func=cmd_embed)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NewickParseError, MalformedTreeError) as exc:
        print(f"mutree: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (IncomparableTreesError, IncompatibleCollectionError) as exc:
        print(f"mutree: incomparable trees: {exc}", file=sys.stderr)
        return EXIT_INCOMPARABLE
    except (UsageError, FileNotFoundError) as exc:
        print(f"mutree: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS


if __name__ == "__main__":
    sys.exit(main())
