"""Reading and writing trees: Newick strings, tree-set files and ideal
mutation matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tree import MalformedTreeError, Tree


class NewickParseError(MalformedTreeError):
    """Syntax error in a Newick string; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int | None = None, line: int | None = None):
        self.position = position
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"column {position + 1}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class IncompatibleCollectionError(ValueError):
    """Trees in one collection do not share a leaf label set."""


class NotPerfectPhylogenyError(ValueError):
    """Two mutation rows have overlapping, non-nested cell supports."""


class ContractionLabelError(ValueError):
    """A tree holding contraction tokens cannot be written as Newick."""


def parse_newick(s: str, *, strict: bool = True) -> Tree:
    """Parse a tree such as ``((1,2),((3,4),5))``.

    Commas may be omitted next to a bracket, so ``((1,2)((4,3)5))`` is
    accepted.  A trailing ``;`` is ignored.  With ``strict`` the labels must
    be exactly ``1..n``.
    """
    text = s.strip()
    if text.endswith(";"):
        text = text[:-1].rstrip()
    pos = 0
    n = len(text)

    def skip():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def member():
        nonlocal pos
        skip()
        if pos >= n:
            raise NewickParseError("unexpected end of input", pos)
        if text[pos] == "(":
            return bracket()
        if text[pos].isdigit():
            start = pos
            while pos < n and text[pos].isdigit():
                pos += 1
            value = int(text[start:pos])
            if value <= 0:
                raise NewickParseError("leaf labels must be positive", start)
            return value
        raise NewickParseError(f"unexpected character {text[pos]!r}", pos)

    def bracket():
        nonlocal pos
        open_at = pos
        pos += 1
        kids = [member()]
        while True:
            skip()
            if pos >= n:
                raise NewickParseError("unbalanced '('", open_at)
            ch = text[pos]
            if ch == ")":
                pos += 1
                break
            if ch == ",":
                pos += 1
                kids.append(member())
                continue
            if ch == "(" or (isinstance(kids[-1], list) and ch.isdigit()):
                kids.append(member())
                continue
            raise NewickParseError(f"expected ',' or ')' but found {ch!r}", pos)
        if len(kids) < 2:
            raise NewickParseError("bracket with a single member", open_at)
        return kids

    skip()
    if pos >= n:
        raise NewickParseError("empty tree", 0)
    if text[pos] != "(":
        raise NewickParseError("a tree must start with '('", pos)
    structure = bracket()
    skip()
    if pos != n:
        raise NewickParseError("trailing characters after the tree", pos)
    labels = _flat(structure)
    if len(labels) != len(set(labels)):
        dup = sorted({v for v in labels if labels.count(v) > 1})
        raise NewickParseError(f"duplicate leaf labels {dup}", text.find(str(dup[0])))
    if strict and sorted(labels) != list(range(1, len(labels) + 1)):
        raise NewickParseError(f"leaf labels must be 1..{len(labels)}")
    return Tree(structure)


def _flat(s) -> list:
    if isinstance(s, int):
        return [s]
    out = []
    for c in s:
        out.extend(_flat(c))
    return out


def serialize_newick(t: Tree) -> str:
    """Canonical, fully comma-separated form."""
    if any(v < 0 for v in t.leaves):
        raise ContractionLabelError("tree still holds contraction tokens")
    return t.newick


def load_tree_set(path, *, strict: bool = True) -> list[Tree]:
    """One Newick tree per line; blank lines and ``#`` comments are skipped."""
    trees, first_line = [], None
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                t = parse_newick(line, strict=strict)
            except NewickParseError as exc:
                raise NewickParseError(str(exc).split(" (")[0], exc.position, i) from None
            if trees and t.leaves != trees[0].leaves:
                raise IncompatibleCollectionError(
                    f"line {i}: leaf set differs from line {first_line}"
                )
            if not trees:
                first_line = i
            trees.append(t)
    return trees


def write_tree_set(path, trees, header: list[str] | None = None) -> None:
    lines = [f"# {h}" for h in header or []]
    lines += [serialize_newick(t) for t in trees]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class MutationMatrix:
    """0/1 matrix, rows are mutations and columns are cells."""

    data: np.ndarray
    mutations: list = field(default_factory=list)
    cells: list = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=int)
        if self.data.ndim != 2:
            raise ValueError("mutation matrix must be 2-D")
        if not np.isin(self.data, (0, 1)).all():
            raise ValueError("mutation matrix entries must be 0 or 1")
        if not self.mutations:
            self.mutations = [f"m{i + 1}" for i in range(self.data.shape[0])]
        if not self.cells:
            self.cells = [str(j + 1) for j in range(self.data.shape[1])]


def read_matrix_csv(path) -> MutationMatrix:
    """CSV with a header row of cell ids; an optional first column names
    the mutations."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
    if not rows:
        raise ValueError("empty matrix file")
    header, body = rows[0], rows[1:]
    named = bool(body) and not _is_bit(body[0][0])
    if named:
        cells = header[1:] if len(header) == len(body[0]) else header
        names = [r[0].strip() for r in body]
        vals = [[int(x) for x in r[1:]] for r in body]
    else:
        cells, names = header, []
        vals = [[int(x) for x in r] for r in body]
    return MutationMatrix(np.array(vals, dtype=int).reshape(len(vals), len(cells)), names, [c.strip() for c in cells])


def _is_bit(x: str) -> bool:
    return x.strip() in ("0", "1")


def matrix_to_tree(m, *, return_mutations: bool = False):
    """Perfect-phylogeny tree of an ideal (conflict-free) matrix.

    Cells become leaves ``1..n`` in column order.  With
    ``return_mutations`` a dict mapping each mutation to its cell cluster
    is returned as well.
    """
    if not isinstance(m, MutationMatrix):
        m = MutationMatrix(np.asarray(m))
    data = m.data
    n_cells = data.shape[1]
    if n_cells < 2:
        raise ValueError("need at least two cells")
    supports = [frozenset(int(j) + 1 for j in np.flatnonzero(row)) for row in data]
    for i in range(len(supports)):
        for j in range(i + 1, len(supports)):
            a, b = supports[i], supports[j]
            if a & b and not (a <= b or b <= a):
                raise NotPerfectPhylogenyError(
                    f"mutations {m.mutations[i]!r} and {m.mutations[j]!r} conflict"
                )
    universe = frozenset(range(1, n_cells + 1))
    clusters = sorted({s for s in supports if len(s) > 1} | {universe}, key=len, reverse=True)

    def build(cl):
        inner = [c for c in clusters if c < cl]
        tops = [c for c in inner if not any(c < d for d in inner)]
        covered = frozenset().union(*tops) if tops else frozenset()
        return [build(c) for c in tops] + sorted(cl - covered)

    tree = Tree(build(universe))
    if return_mutations:
        return tree, dict(zip(m.mutations, supports))
    return tree
