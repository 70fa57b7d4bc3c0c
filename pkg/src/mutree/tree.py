"""Canonical leaf-labeled rooted trees and the one-level subtree move.

A tree is stored as a nested tuple: a leaf is an ``int`` and an internal
node is a tuple of its children.  Canonical form has no unary internal
nodes and orders siblings by the smallest leaf label in their subtree, so
two trees are equal exactly when their nested tuples are equal.

Nodes are addressed by a *node id*: the label for a leaf and the frozenset
of descendant leaf labels for an internal node.  Without unary nodes the
leaf set identifies an internal node uniquely, so ids stay valid across
re-canonicalization and can be carried inside move scripts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Union

NodeId = Union[int, frozenset]
Structure = Union[int, tuple]


class MalformedTreeError(ValueError):
    """Raised when a structure cannot form a valid tree."""


class IllegalMoveError(ValueError):
    """Raised when a move does not apply to the tree it is replayed on."""


class IncomparableTreesError(ValueError):
    """Raised when two trees do not share the same leaf label set."""


def _min_label(s: Structure) -> int:
    while not isinstance(s, int):
        s = s[0]
    return s


def _canon(s) -> Structure:
    if isinstance(s, int):
        return s
    kids = [_canon(c) for c in s]
    if not kids:
        raise MalformedTreeError("empty bracket")
    if len(kids) == 1:
        return kids[0]
    kids.sort(key=_min_label)
    return tuple(kids)


def _labels(s: Structure) -> Iterator[int]:
    if isinstance(s, int):
        yield s
    else:
        for c in s:
            yield from _labels(c)


def canonicalize(structure) -> Structure:
    """Collapse unary nodes and sort siblings; return the nested tuple.

    Accepts any nesting of lists/tuples with ``int`` leaves.  Duplicate
    labels and empty brackets raise :class:`MalformedTreeError`.
    """
    out = _canon(structure)
    labels = list(_labels(out))
    if len(labels) != len(set(labels)):
        raise MalformedTreeError("duplicate leaf labels")
    return out


def node_id(s: Structure) -> NodeId:
    return s if isinstance(s, int) else frozenset(_labels(s))


def _serialize(s: Structure) -> str:
    if isinstance(s, int):
        return str(s)
    return "(" + ",".join(_serialize(c) for c in s) + ")"


class Tree:
    """Immutable canonical rooted tree with distinct integer leaf labels.

    Leaves carry positive labels; negative labels are reserved for
    contraction tokens produced during distance computation.
    """

    __slots__ = ("_root", "_leaves", "_hash", "_index")

    def __init__(self, structure, *, _canonical: bool = False):
        self._root = structure if _canonical else canonicalize(structure)
        self._leaves = frozenset(_labels(self._root))
        self._hash = None
        self._index = None

    # -- basic protocol -------------------------------------------------
    @property
    def root(self) -> Structure:
        return self._root

    @property
    def leaves(self) -> frozenset:
        return self._leaves

    @property
    def n_leaves(self) -> int:
        return len(self._leaves)

    def __eq__(self, other):
        return isinstance(other, Tree) and self._root == other._root

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._root)
        return self._hash

    def __repr__(self):
        return f"Tree('{self.newick}')"

    def __str__(self):
        return self.newick

    @property
    def newick(self) -> str:
        return _serialize(self._root)

    # -- structure ------------------------------------------------------
    def _build_index(self):
        parent, children, struct, depth = {}, {}, {}, {}
        stack = [(self._root, None, 0)]
        while stack:
            s, par, d = stack.pop()
            nid = node_id(s)
            parent[nid] = par
            struct[nid] = s
            depth[nid] = d
            if isinstance(s, tuple):
                kids = [node_id(c) for c in s]
                children[nid] = kids
                stack.extend((c, nid, d + 1) for c in s)
        self._index = (parent, children, struct, depth)
        return self._index

    @property
    def _idx(self):
        return self._index or self._build_index()

    @property
    def root_id(self) -> NodeId:
        return node_id(self._root)

    def parent(self, nid: NodeId):
        return self._idx[0][nid]

    def children(self, nid: NodeId) -> list:
        return list(self._idx[1].get(nid, ()))

    def subtree(self, nid: NodeId) -> Structure:
        return self._idx[2][nid]

    def depth(self, nid: NodeId) -> int:
        return self._idx[3][nid]

    def __contains__(self, nid) -> bool:
        return nid in self._idx[0]

    def nodes(self) -> list:
        """All node ids, preorder from the root (siblings in canonical order)."""
        out = []

        def walk(s):
            out.append(node_id(s))
            if isinstance(s, tuple):
                for c in s:
                    walk(c)

        walk(self._root)
        return out

    def internal_nodes(self) -> list:
        return [n for n in self.nodes() if isinstance(n, frozenset)]

    @property
    def n_internal(self) -> int:
        return len(self._idx[1])

    @property
    def n_nodes(self) -> int:
        return len(self._idx[0])

    @property
    def height(self) -> int:
        def h(s):
            return 0 if isinstance(s, int) else 1 + max(h(c) for c in s)

        return h(self._root)

    def with_root(self, structure) -> "Tree":
        return Tree(structure)


def height(t: Tree) -> int:
    """Number of edges on the longest root-to-leaf path."""
    return t.height


def is_equal(a: Tree, b: Tree) -> bool:
    """True iff the trees have identical bracket sets (distance zero)."""
    if a.leaves != b.leaves:
        raise IncomparableTreesError("trees have different leaf sets")
    return a.root == b.root


@dataclass(frozen=True)
class BracketSet:
    """Members of one internal node: leaf labels and nested bracket ids."""

    owner: frozenset
    leaves: frozenset
    nested: tuple

    def __len__(self):
        return len(self.leaves) + len(self.nested)


def bracket_sets(t: Tree) -> list[BracketSet]:
    """One bracket set per internal node, listed top to bottom (BFS order)."""
    out = []
    queue = [t.root]
    while queue:
        nxt = []
        for s in queue:
            leaves = frozenset(c for c in s if isinstance(c, int))
            nested = tuple(node_id(c) for c in s if isinstance(c, tuple))
            out.append(BracketSet(node_id(s), leaves, nested))
            nxt.extend(c for c in s if isinstance(c, tuple))
        queue = nxt
    return out


# -- moves ---------------------------------------------------------------


@dataclass(frozen=True)
class Move:
    """Relocate ``subject`` one level.

    ``up``: to the grandparent.  ``up`` with ``fresh``: stay put while the
    subject's siblings are wrapped in a new bracket, i.e. the subject rises
    above them.  ``down``: into the internal sibling ``target``.  ``down``
    with ``fresh``: a new bracket is opened around ``target`` and the subject
    joins it.  The fresh variants are the moves that pass through a
    transient unary bracket; they are the inverses of collapsing moves.
    """

    subject: NodeId
    direction: str
    target: NodeId | None = None
    fresh: bool = False

    def __str__(self):
        def fmt(n):
            if isinstance(n, int):
                return str(n)
            return "{" + ",".join(map(str, sorted(n))) + "}"

        tag = self.direction + ("*" if self.fresh else "")
        if self.target is None:
            return f"{tag} {fmt(self.subject)}"
        return f"{tag} {fmt(self.subject)} -> {fmt(self.target)}"


def _to_lists(s):
    return s if isinstance(s, int) else [_to_lists(c) for c in s]


def apply_move(t: Tree, m: Move) -> Tree:
    """Return the canonical tree obtained by replaying ``m`` on ``t``."""
    if m.subject not in t or m.subject == t.root_id:
        raise IllegalMoveError(f"bad subject in {m}")
    par = t.parent(m.subject)
    siblings = [c for c in t.children(par) if c != m.subject]
    subj = t.subtree(m.subject)
    rest = [t.subtree(c) for c in siblings]

    if m.direction == "up" and not m.fresh:
        if m.target is not None:
            raise IllegalMoveError("up move takes no target")
        grand = t.parent(par)
        if grand is None:
            raise IllegalMoveError(f"{m}: parent has no parent")
        new_par = tuple(rest)
        new_grand = [t.subtree(c) if c != par else new_par for c in t.children(grand)]
        new_grand.append(subj)
        return _replace(t, grand, new_grand)
    if m.direction == "up":
        if m.target is not None or len(rest) < 2:
            raise IllegalMoveError(f"{m}: needs two or more siblings")
        return _replace(t, par, [subj, tuple(rest)])
    if m.direction == "down":
        if m.target not in siblings:
            raise IllegalMoveError(f"{m}: target is not a sibling")
        target = t.subtree(m.target)
        others = [t.subtree(c) for c in siblings if c != m.target]
        if m.fresh:
            if not others:
                raise IllegalMoveError(f"{m}: would recreate the parent")
            return _replace(t, par, others + [(target, subj)])
        if isinstance(target, int):
            raise IllegalMoveError(f"{m}: target is a leaf")
        return _replace(t, par, others + [target + (subj,)])
    raise IllegalMoveError(f"unknown direction {m.direction!r}")


def _replace(t: Tree, nid: frozenset, new_children) -> Tree:
    """Swap the node ``nid`` for an internal node with ``new_children``."""

    def rebuild(s):
        if isinstance(s, int):
            return s
        if node_id(s) == nid:
            return [_to_lists(c) for c in new_children]
        return [rebuild(c) for c in s]

    return Tree(rebuild(t.root))


def enumerate_moves(t: Tree) -> list[Move]:
    """Every legal move on ``t`` exactly once, in a deterministic order."""
    moves = []
    for nid in t.nodes():
        par = t.parent(nid)
        if par is None:
            continue
        sibs = [c for c in t.children(par) if c != nid]
        if t.parent(par) is not None:
            moves.append(Move(nid, "up"))
        if len(sibs) >= 2:
            moves.append(Move(nid, "up", fresh=True))
        for s in sibs:
            if isinstance(s, frozenset):
                moves.append(Move(nid, "down", s))
            if len(sibs) >= 2:
                moves.append(Move(nid, "down", s, fresh=True))
    return moves


def neighbors(t: Tree) -> Iterator[tuple[Move, Tree]]:
    for m in enumerate_moves(t):
        yield m, apply_move(t, m)


def replay(t: Tree, moves: Iterable[Move]) -> Tree:
    for m in moves:
        t = apply_move(t, m)
    return t


def inverse_move(t: Tree, m: Move) -> Move:
    """The single move undoing ``m`` when applied to ``apply_move(t, m)``."""
    par = t.parent(m.subject)
    if par is None:
        raise IllegalMoveError(f"bad subject in {m}")
    sib = [c for c in t.children(par) if c != m.subject]
    sub = _as_set(m.subject)
    if m.direction == "up" and not m.fresh:
        apply_move(t, m)  # validates
        if len(sib) >= 2:
            return Move(m.subject, "down", par - sub)
        return Move(m.subject, "down", sib[0], fresh=True)
    if m.direction == "up":
        if len(sib) < 2:
            raise IllegalMoveError(f"{m}: needs two or more siblings")
        return Move(m.subject, "down", par - sub)
    if m.direction == "down":
        if m.target not in sib:
            raise IllegalMoveError(f"{m}: target is not a sibling")
        if m.fresh:
            if len(sib) < 2:
                raise IllegalMoveError(f"{m}: would recreate the parent")
            return Move(m.subject, "up")
        if isinstance(m.target, int):
            raise IllegalMoveError(f"{m}: target is a leaf")
        return Move(m.subject, "up", fresh=len(sib) == 1)
    raise IllegalMoveError(f"unknown direction {m.direction!r}")


def _as_set(nid: NodeId) -> frozenset:
    return nid if isinstance(nid, frozenset) else frozenset([nid])


def reverse_script(t: Tree, moves: Iterable[Move]) -> list[Move]:
    """Given a script taking ``t`` to some ``u``, the script taking ``u`` back to ``t``."""
    inv = []
    for m in moves:
        inv.append(inverse_move(t, m))
        t = apply_move(t, m)
    return inv[::-1]


def contract(t: Tree, v: frozenset, removed: Iterable[NodeId], label: int) -> Tree:
    """Replace the almost v-tree rooted at ``v`` by the token ``label``.

    ``removed`` lists children of ``v`` that are not part of the matched
    structure; they stay attached to ``v`` next to the token.  With no
    removed children the token takes the place of ``v`` itself.
    """
    if v not in t or isinstance(v, int):
        raise KeyError(f"{v} is not an internal node of the tree")
    removed = list(removed)
    kids = t.children(v)
    if any(r not in kids for r in removed):
        raise KeyError("removed nodes must be children of v")
    keep = [t.subtree(r) for r in removed] + [label]
    return _replace(t, v, keep) if len(keep) > 1 else _replace_by_leaf(t, v, label)


def _replace_by_leaf(t: Tree, nid: frozenset, label: int) -> Tree:
    def rebuild(s):
        if isinstance(s, int):
            return s
        if node_id(s) == nid:
            return label
        return [rebuild(c) for c in s]

    return Tree(rebuild(t.root))
