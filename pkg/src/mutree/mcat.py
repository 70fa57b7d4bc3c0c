"""Maximum common almost v-tree (MCAT).

An almost v-tree is the subtree of an internal node v with some whole child
subtrees removed.  Two of them, one per tree, form a common pair when they
have the same leaf set and the same unlabeled shape; child subtrees are
paired by shape, so a pair may hold different leaves as long as the
union agrees.  Contraction tokens (negative labels) count as leaves.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .tree import IllegalMoveError, Move, Tree, apply_move

MAX_COMPONENT_SUBSETS = 12


@dataclass(frozen=True)
class AlmostVTree:
    """Node ``v`` of tree ``host`` minus the child subtrees in ``removed``."""

    host: str
    v: object
    removed: frozenset = frozenset()

    @property
    def j(self) -> int:
        return len(self.removed)

    def children(self, t: Tree) -> list:
        if isinstance(self.v, int):
            return []
        return [c for c in t.children(self.v) if c not in self.removed]

    def leaves(self, t: Tree) -> frozenset:
        if isinstance(self.v, int):
            return frozenset([self.v])
        out = set()
        for c in self.children(t):
            out |= {c} if isinstance(c, int) else c
        return frozenset(out)

    def structure(self, t: Tree):
        if isinstance(self.v, int):
            return self.v
        kids = [t.subtree(c) for c in self.children(t)]
        return kids[0] if len(kids) == 1 else tuple(kids)

    def as_tree(self, t: Tree) -> Tree:
        return Tree(_lists(self.structure(t)))


@dataclass(frozen=True)
class MCATSolution:
    in_p: AlmostVTree
    in_q: AlmostVTree
    leaf_count: int
    child_matching: tuple = ()
    serialization: str = ""

    @property
    def j(self) -> int:
        return self.in_p.j + self.in_q.j


def _lists(s):
    return s if isinstance(s, int) else [_lists(c) for c in s]


@lru_cache(maxsize=None)
def shape_code(s) -> str:
    """Canonical code of the unlabeled shape of a nested-tuple structure."""
    if isinstance(s, int):
        return "x"
    return "(" + "".join(sorted(shape_code(c) for c in s)) + ")"


def _leafset(nid) -> frozenset:
    return frozenset([nid]) if isinstance(nid, int) else nid


def _serial(t: Tree, kids) -> str:
    return Tree([_lists(t.subtree(c)) for c in kids]).newick if len(kids) > 1 else str(
        Tree(_lists(t.subtree(kids[0]))).newick if not isinstance(kids[0], int) else kids[0]
    )


def _match_children(a: Tree, b: Tree, ka: list, kb: list) -> tuple:
    """Shape-respecting bijection, pairing by largest leaf overlap."""
    pairs = []
    codes = sorted({shape_code(a.subtree(c)) for c in ka})
    for code in codes:
        xa = [c for c in ka if shape_code(a.subtree(c)) == code]
        xb = [c for c in kb if shape_code(b.subtree(c)) == code]
        w = np.array(
            [[-len(_leafset(p) & _leafset(q)) for q in xb] for p in xa], dtype=float
        )
        r, c = linear_sum_assignment(w)
        pairs.extend((xa[i], xb[j]) for i, j in zip(r, c))
    return tuple(sorted(pairs, key=lambda pq: min(_leafset(pq[0]))))


def _pair_candidates(a: Tree, b: Tree, v, w, mode: str = "shape"):
    """Best retained child sets for the node pair (v, w), or None."""
    ka, kb = a.children(v), b.children(w)
    lv, lw = v, w
    elig_a = [_leafset(c) <= lw for c in ka]
    elig_b = [_leafset(c) <= lv for c in kb]
    m = len(ka)
    parent = list(range(m + len(kb)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, c in enumerate(ka):
        sc = _leafset(c)
        for j, d in enumerate(kb):
            if sc & _leafset(d):
                parent[find(i)] = find(m + j)
    comps = {}
    for i in range(len(parent)):
        comps.setdefault(find(i), []).append(i)
    closed = []
    for members in comps.values():
        ok = all(elig_a[i] if i < m else elig_b[i - m] for i in members)
        sa = [ka[i] for i in members if i < m]
        sb = [kb[i - m] for i in members if i >= m]
        if mode == "leaves" and not (len(sa) == len(sb) == 1):
            ok = False
        if ok and sa and sb:
            size = sum(len(_leafset(c)) for c in sa)
            closed.append((size, sa, sb))
    if not closed:
        return None
    closed.sort(key=lambda x: (-x[0], sorted(min(_leafset(c)) for c in x[1])))

    def shapes(t, kids):
        return Counter(shape_code(t.subtree(c)) for c in kids)

    best = None
    if len(closed) <= MAX_COMPONENT_SUBSETS:
        subsets = (
            s
            for r in range(len(closed), 0, -1)
            for s in itertools.combinations(closed, r)
        )
    else:
        balanced = [c for c in closed if shapes(a, c[1]) == shapes(b, c[2])]
        subsets = iter([tuple(closed), tuple(balanced)] + [(c,) for c in balanced])
    for sub in subsets:
        size = sum(x[0] for x in sub)
        if best is not None and size < best[0]:
            continue
        sa = [c for x in sub for c in x[1]]
        sb = [c for x in sub for c in x[2]]
        if len(sa) < 2 and not (len(sa) == len(ka) and len(sb) == len(kb)):
            continue
        if shapes(a, sa) != shapes(b, sb):
            continue
        j = (len(ka) - len(sa)) + (len(kb) - len(sb))
        key = (size, -j)
        if best is None or key > best[:2]:
            best = (size, -j, sa, sb)
    return best


def solve_mcat(a: Tree, b: Tree, *, mode: str = "shape") -> MCATSolution:
    """A maximum common almost v-tree pair of ``a`` and ``b``.

    With ``mode="shape"`` paired children only need the same shape and the
    two retained child sets the same leaves overall.  ``mode="leaves"``
    additionally requires every paired child to hold the same leaves.
    Ties prefer fewer removed children, then the smallest serialization of
    the structure, then the position of v in ``a``.
    """
    if mode not in ("shape", "leaves"):
        raise ValueError("mode must be 'shape' or 'leaves'")
    shared = a.leaves & b.leaves
    if not shared:
        raise ValueError("trees share no leaf")
    leaf = min(shared, key=lambda v: (abs(v), v))
    best = MCATSolution(AlmostVTree("a", leaf), AlmostVTree("b", leaf), 1, ((leaf, leaf),), str(leaf))
    best_key = (-1, 0, str(leaf), ())
    a_nodes = a.internal_nodes()
    b_nodes = b.internal_nodes()
    for v in a_nodes:
        for w in b_nodes:
            if len(v & w) < 2:
                continue
            res = _pair_candidates(a, b, v, w, mode)
            if res is None:
                continue
            size, negj, sa, sb = res
            if size < -best_key[0]:
                continue
            ser = _serial(a, sa)
            key = (-size, -negj, ser, (sorted(v), sorted(w)))
            if key < best_key:
                best_key = key
                removed_a = frozenset(c for c in a.children(v) if c not in sa)
                removed_b = frozenset(c for c in b.children(w) if c not in sb)
                best = MCATSolution(
                    AlmostVTree("a", v, removed_a),
                    AlmostVTree("b", w, removed_b),
                    size,
                    _match_children(a, b, sa, sb),
                    ser,
                )
    return best


def solve_mcat_many(trees: list[Tree]) -> tuple[Tree, list[AlmostVTree]]:
    """Common almost v-tree of several trees, by folding the pairwise solver.

    Returns the common structure (as a tree) and its location in every input.
    """
    if not trees:
        raise ValueError("no trees")
    cur = trees[0]
    for t in trees[1:]:
        sol = solve_mcat(cur, t)
        cur = sol.in_p.as_tree(cur) if not isinstance(sol.in_p.v, int) else None
        if cur is None or cur.n_leaves < 2:
            return None, []
    while True:
        spots, shrunk = [], False
        for t in trees:
            sol = solve_mcat(cur, t)
            if sol.leaf_count < cur.n_leaves:
                if isinstance(sol.in_p.v, int):
                    return None, []
                cur, shrunk = sol.in_p.as_tree(cur), True
                break
            spots.append(sol.in_q)
        if not shrunk:
            return cur, spots


# -- contraction-root alignment ----------------------------------------------


def _label_of(t: Tree, v) -> int | None:
    if isinstance(v, int):
        return v if v < 0 else None
    toks = [c for c in t.children(v) if isinstance(c, int) and c < 0]
    return max(toks) if toks else None


def _step_towards(t: Tree, node, token: int):
    """One move bringing ``node`` closer to the parent of ``token``, or None."""
    dest, par = t.parent(token), t.parent(node)
    if par == dest:
        return None
    if dest < par:
        step = next(c for c in t.children(par) if c != node and not isinstance(c, int) and dest <= c)
        return Move(node, "down", step)
    if t.parent(par) is not None:
        return Move(node, "up")
    return None


def _walk(t: Tree, node, token: int, cost: int) -> tuple[Tree, int]:
    for _ in range(4 * t.n_leaves + 4):
        m = _step_towards(t, node, token)
        if m is None:
            break
        try:
            t = apply_move(t, m)
        except IllegalMoveError:
            break
        cost += 1
    return t, cost


def _relocate_each(t: Tree, kids: list, token: int) -> tuple[Tree, int]:
    cost = 0
    for k in kids:
        if token not in _leafset(k):
            t, cost = _walk(t, k, token, cost)
    return t, cost


def _relocate_group(t: Tree, v, token: int) -> tuple[Tree, int] | None:
    """Carry ``v`` next to ``token`` as one subtree, then dissolve it."""
    if token in v:
        return None
    t, cost = _walk(t, v, token, 0)
    if t.parent(v) != t.parent(token):
        return None
    for k in t.children(v)[:-1]:
        t = apply_move(t, Move(k, "up"))
        cost += 1
    return t, cost


def _relocate(t: Tree, avt: AlmostVTree, token: int) -> tuple[Tree, int]:
    """Bring the retained children of ``avt`` next to ``token``: either child
    by child, or (when nothing was removed) by moving ``v`` as a whole and
    then dissolving it.  The cheaper route is used; ties go to the group
    move.  Returns the new tree and the number of moves."""
    if token not in t or isinstance(avt.v, int):
        return t, 0
    each = _relocate_each(t, list(avt.children(t)), token)
    if avt.j == 0:
        group = _relocate_group(t, avt.v, token)
        if group is not None and group[1] <= each[1]:
            return group
    return each


def align_contraction_roots(a: Tree, b: Tree, sol: MCATSolution) -> tuple[Tree, Tree, int]:
    """Make the two roots of ``sol`` carry the same contraction label.

    A root is labeled when it holds a contraction token as a direct child.
    If only one side is labeled, the other side's matched children are
    moved next to that token in their own tree.  If both carry different
    labels the cheaper of the two relocations is used (ties act on ``a``).
    Returns the adjusted trees and the number of moves spent.
    """
    la, lb = _label_of(a, sol.in_p.v), _label_of(b, sol.in_q.v)
    if la == lb:
        return a, b, 0
    if la is not None and lb is None:
        nb, cost = _relocate(b, sol.in_q, la)
        return a, nb, cost
    if lb is not None and la is None:
        na, cost = _relocate(a, sol.in_p, lb)
        return na, b, cost
    na, ca = _relocate(a, sol.in_p, lb)
    nb, cb = _relocate(b, sol.in_q, la)
    if ca <= cb:
        return na, b, ca
    return a, nb, cb
