"""Move distance between trees with an explicit move script.

The computation splits both trees along every cluster they share.  A shared
cluster is contracted to a single token leaf on both sides, so the
distance is the sum of the distances of the independent regions that
remain.  Inside one region the trees share no cluster, and the script is
built from a mapping between their internal nodes: every mapped node is
morphed into its image by whole-subtree additions and removals, unmapped
nodes are dissolved and missing clusters are created by grouping moves.
Regions with few candidate mappings try all of them and branch over the
order of productive moves, pruned by a cluster-matching lower bound.
Larger regions only try the assignment-ranked mappings with a smaller
search budget.  Both directions are solved and the shorter script kept.
When neither search finished, two-leg scripts through the tree of mutually
compatible clusters and through the flat tree compete as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .tree import (
    IncomparableTreesError,
    Move,
    Tree,
    apply_move,
    node_id,
    replay,
    reverse_script,
)

# regions with at most this many cluster mappings are searched over all of
# them; larger ones only over the assignment-ranked mappings
EXACT_MAPPINGS = 250
EXACT_EXPANSIONS = 1500
GREEDY_MAPPINGS = 6
GREEDY_EXPANSIONS = 300


@dataclass(frozen=True)
class MoveSequence:
    """Ordered move script; ``cost`` is its length."""

    steps: tuple = ()

    @property
    def cost(self) -> int:
        return len(self.steps)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def replay(self, t: Tree) -> Tree:
        return replay(t, self.steps)

    def states(self, t: Tree) -> list[Tree]:
        out = [t]
        for m in self.steps:
            out.append(apply_move(out[-1], m))
        return out


@dataclass(frozen=True)
class TraceStep:
    """One region of the decomposition: the shared cluster it lives under,
    the leaves and tokens it works on, and the moves it cost."""

    cluster: frozenset
    members: frozenset
    cost: int
    exact: bool


@dataclass(frozen=True)
class DistanceResult:
    value: int
    script: MoveSequence
    trace: tuple = field(default=())

    def __int__(self):
        return self.value


# -- object tree used while building a script ------------------------------


class _Node:
    __slots__ = ("kids", "par", "tgt", "label", "_lv")

    def __init__(self, label=None):
        self.kids = []
        self.par = None
        self.tgt = None
        self.label = label
        self._lv = None

    def leaves(self) -> frozenset:
        return self._lv

    def nid(self):
        return self.label if self.label is not None else self._lv


def _build(s, par=None):
    n = _Node(s) if isinstance(s, int) else _Node()
    if not isinstance(s, int):
        n.kids = [_build(c, n) for c in s]
    n.par = par
    return n


class _Work:
    """Mutable copy of the source tree with a target cluster per node."""

    def __init__(self, x: Tree, y: Tree, f: dict):
        self.root = _build(x.root)
        self.y = y
        self.moves = []
        self.refresh()
        self.root.tgt = y.root_id
        for n in self.internal():
            if n is not self.root:
                n.tgt = f.get(n._lv)

    def refresh(self):
        def walk(n):
            if n.label is not None:
                n._lv = frozenset((n.label,))
            else:
                acc = set()
                for k in n.kids:
                    walk(k)
                    acc |= k._lv
                n._lv = frozenset(acc)

        walk(self.root)

    def internal(self) -> list:
        if self.root.label is not None:
            return []
        out, st = [], [self.root]
        while st:
            n = st.pop()
            out.append(n)
            st.extend([k for k in reversed(n.kids) if k.label is None])
        return out

    def emit(self, m: Move):
        self.moves.append(m)

    def _splice(self, p, only):
        g = p.par
        only.par = g
        if g is None:
            self.root = only
            only.tgt = p.tgt
        else:
            g.kids[g.kids.index(p)] = only
            if only.label is None and only.tgt is None:
                only.tgt = p.tgt

    def up(self, c):
        p, g = c.par, c.par.par
        self.emit(Move(c.nid(), "up"))
        p.kids.remove(c)
        g.kids.append(c)
        c.par = g
        p._lv = p._lv - c._lv
        if len(p.kids) == 1:
            self._splice(p, p.kids[0])

    def down(self, c, s, inherit):
        p = c.par
        self.emit(Move(c.nid(), "down", s.nid()))
        p.kids.remove(c)
        s.kids.append(c)
        c.par = s
        s._lv = s._lv | c._lv
        if len(p.kids) == 1:
            if inherit:
                s.tgt = p.tgt
            self._splice(p, s)

    def pair(self, c, s, tgt):
        p = c.par
        self.emit(Move(c.nid(), "down", s.nid(), fresh=True))
        w = _Node()
        w.par, w.tgt = p, tgt
        p.kids.remove(c)
        p.kids[p.kids.index(s)] = w
        w.kids = [s, c]
        s.par = c.par = w
        w._lv = s._lv | c._lv

    def wrap(self, c, tgt):
        p = c.par
        self.emit(Move(c.nid(), "up", fresh=True))
        w = _Node()
        w.tgt, w.par = tgt, p
        w.kids = [k for k in p.kids if k is not c]
        for k in w.kids:
            k.par = w
        w._lv = p._lv - c._lv
        p.kids = [c, w]

    def apply(self, act):
        kind = act[0]
        if kind == "up":
            self.up(act[1])
        elif kind == "down":
            self.down(act[1], act[2], act[3])
        elif kind == "pair":
            self.pair(act[1], act[2], act[3])
        elif kind == "wrap":
            self.wrap(act[1], act[2])
        else:
            act[1].tgt = None

    def snapshot(self, act) -> tuple:
        """State of every node ``act`` can touch, for :meth:`restore`."""
        c = act[1]
        touched = {c, c.par}
        if c.par is not None:
            touched.add(c.par.par)
            touched.update(c.par.kids)
        if len(act) > 2 and isinstance(act[2], _Node):
            touched.add(act[2])
        touched.discard(None)
        saved = [(n, list(n.kids), n.par, n.tgt, n._lv) for n in touched]
        return self.root, len(self.moves), saved

    def restore(self, snap: tuple) -> None:
        self.root, k, saved = snap
        del self.moves[k:]
        for n, kids, par, tgt, lv in saved:
            n.kids, n.par, n.tgt, n._lv = kids, par, tgt, lv

    def signature(self, nodes=None):
        return frozenset((n._lv, n.tgt) for n in nodes or self.internal())

    def clusters(self, nodes=None) -> frozenset:
        return frozenset(n._lv for n in nodes or self.internal() if n is not self.root)


def _clusters(t: Tree) -> frozenset:
    r = t.root_id
    return frozenset(c for c in t.internal_nodes() if c != r)


def _cluster_bound(cx: frozenset, cy: frozenset) -> int:
    """Admissible estimate of the remaining moves.

    A move edits one cluster by one block, or creates or deletes one
    cluster, so the cheapest matching between the two cluster families
    (a pair costs one per non-empty side of its symmetric difference, an
    unmatched cluster costs one) drops by at most one per move.
    """
    xs = list(cx - cy)
    ys = list(cy - cx)
    if not xs or not ys:
        return len(xs) + len(ys)
    m, n = len(xs), len(ys)
    c = np.ones((m + n, m + n))
    c[m:, n:] = 0.0
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            c[i, j] = (1.0 if a - b else 0.0) + (1.0 if b - a else 0.0)
    r, k = linear_sum_assignment(c)
    return int(round(c[r, k].sum()))


def _candidates(w: _Work, ycl: frozenset) -> list:
    """Productive actions in priority order."""
    nodes = w.internal()
    adds, dooms, creates, removes, shrinks = [], [], [], [], []
    for x in nodes:
        if x is w.root:
            continue
        p = x.par
        if x.tgt is not None:
            if len(p.kids) > 2 or p.tgt is None:
                for y in p.kids:
                    if y is not x and y._lv <= x.tgt:
                        adds.append(("down", y, x, False))
            if len(x.kids) >= 3:
                for y in x.kids:
                    if not (y._lv & x.tgt):
                        removes.append(("up", y))
        elif len(x.kids) == 2:
            dooms.append(("up", x.kids[0]))
        elif len(p.kids) == 2:
            s = p.kids[0] if p.kids[1] is x else p.kids[1]
            dooms.append(("down", s, x, True))
        else:
            for y in x.kids:
                shrinks.append(("up", y))
    realized = {n.tgt for n in nodes if n.tgt is not None}
    for b in sorted(ycl - realized, key=lambda c: (len(c), sorted(c))):
        for p in nodes:
            if len(p.kids) < 3 or not (b < p._lv or b & p._lv):
                continue
            inside = [c for c in p.kids if c._lv <= b]
            if len(inside) < 2:
                continue
            outside = [c for c in p.kids if not (c._lv <= b)]
            clean = all(not (c._lv & b) for c in outside)
            # wrapping everything but one sibling, then ejecting the
            # remaining non-members, costs one move per non-member left
            for c in outside:
                if clean or len(outside) == 1:
                    creates.append((len(outside) - 1, ("wrap", c, b)))
            if len(inside) < len(p.kids) - 1:
                # any two members seed the new cluster equally well
                creates.append((len(inside) - 2, ("pair", inside[1], inside[0], b)))
    creates = [a for _, a in sorted(creates, key=lambda e: e[0])]
    return adds + dooms + creates + removes + shrinks


def _stuck_doom(w: _Work):
    """Give up on one mapped node; returns False when nothing is left to drop."""
    best = None
    for x in w.internal():
        if x is w.root or x.tgt is None:
            continue
        if x._lv != x.tgt:
            return ("doom", x)
        best = best or ("doom", x)
    return best


def _greedy(x: Tree, y: Tree, f: dict, limit: int | None = None) -> list | None:
    ycl = _clusters(y)
    w = _Work(x, y, f)
    limit = limit or 4 * (x.n_leaves + 2) * (x.height + y.height + 2)
    while w.clusters() != ycl:
        if len(w.moves) > limit:
            return None
        acts = _candidates(w, ycl)
        act = acts[0] if acts else _stuck_doom(w)
        if act is None:
            return None
        w.apply(act)
    return w.moves


def _branch(x: Tree, y: Tree, f: dict, bound: int, budget: list) -> list | None:
    """Branch-and-bound over productive move orders for a fixed mapping.

    Returns the shortest script strictly shorter than ``bound``, or None.
    """
    ycl = _clusters(y)
    best = [None]
    lim = [bound]
    table = {}

    def rec(w: _Work):
        nodes = w.internal()
        sig = w.signature(nodes)
        if table.get(sig, lim[0] + 1) <= len(w.moves):
            return
        table[sig] = len(w.moves)
        cl = w.clusters(nodes)
        if cl == ycl:
            if len(w.moves) < lim[0]:
                best[0] = list(w.moves)
                lim[0] = len(w.moves)
            return
        budget[0] -= 1
        if budget[0] < 0:
            return
        if len(w.moves) + _cluster_bound(cl, ycl) >= lim[0]:
            return
        acts = _candidates(w, ycl)
        if not acts:
            d = _stuck_doom(w)
            acts = [d] if d else []
        for act in acts:
            snap = w.snapshot(act)
            w.apply(act)
            rec(w)
            w.restore(snap)

    rec(_Work(x, y, f))
    return best[0]


# -- mappings ----------------------------------------------------------------


def _blocks(t: Tree, part: frozenset) -> int:
    """Fewest subtrees of ``t`` whose leaves exactly tile ``part``."""
    if not part:
        return 0
    count = 0
    stack = [t.root]
    while stack:
        s = stack.pop()
        lv = frozenset([s]) if isinstance(s, int) else None
        if lv is None:
            lv = node_id(s)
        if lv <= part:
            count += 1
        elif lv & part and not isinstance(s, int):
            stack.extend(s)
    return count


def _cost_matrix(x: Tree, y: Tree):
    xs = sorted(_clusters(x), key=lambda c: (len(c), sorted(c)))
    ys = sorted(_clusters(y), key=lambda c: (len(c), sorted(c)))
    m, n = len(xs), len(ys)
    size = m + n
    big = 10 ** 6
    c = np.full((size, size), 0.0)
    c[:m, :n] = big
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            if a & b:
                c[i, j] = min(_blocks(x, a - b) + _blocks(y, b - a), 2.5)
    c[:m, n:] = big
    c[m:, :n] = big
    for i in range(m):
        c[i, n + i] = 1.0
    for j in range(n):
        c[m + j, j] = 1.0
    return xs, ys, c


def _assignment_mappings(x: Tree, y: Tree, k: int) -> list[dict]:
    """The cheapest mapping plus up to ``k - 1`` runners-up (one forced
    exclusion at a time)."""
    xs, ys, c = _cost_matrix(x, y)
    m, n = len(xs), len(ys)

    def solve(cm):
        r, col = linear_sum_assignment(cm)
        if cm[r, col].sum() >= 10 ** 6:
            return None
        return {xs[i]: ys[j] for i, j in zip(r, col) if i < m and j < n}

    out = []
    first = solve(c)
    if first is None:
        return [{}]
    out.append(first)
    for a, b in sorted(first.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        if len(out) >= k:
            break
        cm = c.copy()
        cm[xs.index(a), ys.index(b)] = 10 ** 6
        alt = solve(cm)
        if alt is not None and alt not in out:
            out.append(alt)
    if {} not in out and len(out) < k:
        out.append({})
    return out


def _all_mappings(x: Tree, y: Tree, cap: int) -> list[dict] | None:
    """Every injective map between overlapping clusters, or None when
    there are more than ``cap`` of them."""
    xs = sorted(_clusters(x), key=lambda c: (len(c), sorted(c)))
    ys = sorted(_clusters(y), key=lambda c: (len(c), sorted(c)))
    opts = [[b for b in ys if a & b] for a in xs]
    out = []
    cur = {}

    def rec(i, used):
        if len(out) > cap:
            return
        if i == len(xs):
            out.append(dict(cur))
            return
        for b in opts[i]:
            if b not in used:
                cur[xs[i]] = b
                rec(i + 1, used | {b})
                del cur[xs[i]]
        rec(i + 1, used)

    rec(0, frozenset())
    if len(out) > cap:
        return None
    out.sort(key=len, reverse=True)
    return out


# -- region solving ------------------------------------------------------------


def _search(x: Tree, y: Tree, maps: list[dict], seeds: list[dict], budget: int) -> tuple:
    """Greedy scripts for ``seeds``, then branch-and-bound over ``maps``
    under a shared expansion budget.  Returns (best, finished)."""
    best = None
    for f in seeds:
        g = _greedy(x, y, f)
        if g is not None and (best is None or len(g) < len(best)):
            best = g
    if best is not None and len(best) <= _cluster_bound(_clusters(x), _clusters(y)):
        return best, True
    left = [budget]
    for f in maps:
        bound = len(best) if best is not None else 4 * x.n_leaves * (x.height + y.height)
        s = _branch(x, y, f, bound, left)
        if s is not None:
            best = s
        if left[0] < 0:
            return best, False
    return best, True


def _flatten_rebuild(x: Tree, y: Tree) -> list:
    s = _greedy(x, y, {}, limit=10 ** 9)
    assert s is not None
    return s


@lru_cache(maxsize=200000)
def _one_way(x: Tree, y: Tree) -> tuple:
    maps = _all_mappings(x, y, EXACT_MAPPINGS)
    if maps is not None:
        moves, done = _search(x, y, maps, _assignment_mappings(x, y, 2), EXACT_EXPANSIONS)
    else:
        seeds = _assignment_mappings(x, y, GREEDY_MAPPINGS)
        moves, _ = _search(x, y, seeds, seeds, GREEDY_EXPANSIONS)
        done = False
    if moves is None:
        moves = _flatten_rebuild(x, y)
    if replay(x, moves) != y:
        raise AssertionError("region script does not reach its target")
    return tuple(moves), done


def _compatible(c: frozenset, family) -> bool:
    return all(not (c & d) or c <= d or d <= c for d in family)


def _laminar_tree(leaves: frozenset, clusters) -> Tree:
    order = sorted(clusters, key=len, reverse=True)

    def build(cl):
        inner = [c for c in order if c < cl]
        tops = [c for c in inner if not any(c < d for d in inner)]
        covered = frozenset().union(*tops) if tops else frozenset()
        return [build(c) for c in tops] + sorted(cl - covered)

    return Tree(build(frozenset(leaves)))


def _waypoints(x: Tree, y: Tree) -> list[Tree]:
    """Intermediate trees for two-leg scripts: the tree holding every
    cluster of either side that is compatible with the other side, and the
    flat tree.  Both are symmetric in ``x`` and ``y``."""
    cx, cy = _clusters(x), _clusters(y)
    keep = {c for c in cx if _compatible(c, cy)} | {c for c in cy if _compatible(c, cx)}
    out = [_laminar_tree(x.leaves, keep), Tree(sorted(x.leaves))]
    return [w for w in dict.fromkeys(out) if w != x and w != y]


def _solve_region(x: Tree, y: Tree) -> tuple:
    """Script from ``x`` to ``y`` for one region; returns (moves, exact flag).

    Both directions are searched and the shorter is kept.  When neither
    search finished, two-leg scripts through :func:`_waypoints` are tried
    as well.  Every candidate has a length that does not depend on the
    argument order, so the value is symmetric by construction.
    """
    best, exact = _both_ways(x, y)
    if not exact:
        for w in _waypoints(x, y):
            leg, _ = _both_ways(x, w)
            tail, _ = _both_ways(y, w)
            if len(leg) + len(tail) < len(best):
                best = leg + tuple(reverse_script(y, tail))
    return best, exact


def _both_ways(x: Tree, y: Tree) -> tuple:
    """Shorter of the forward script and the reversed backward script."""
    if x == y:
        return (), True
    fwd, ok_f = _one_way(x, y)
    back, ok_b = _one_way(y, x)
    if len(back) < len(fwd):
        return tuple(reverse_script(y, back)), ok_b and ok_f
    return fwd, ok_f and ok_b


# -- relabeling so that regions of equal shape share cache entries ------------


def _relabel_struct(s, mp):
    if isinstance(s, int):
        return mp[s]
    return [_relabel_struct(c, mp) for c in s]


def _map_id(nid, mp):
    if isinstance(nid, int):
        return mp[nid]
    return frozenset(mp[v] for v in nid)


def _map_move(m: Move, mp) -> Move:
    return Move(
        _map_id(m.subject, mp),
        m.direction,
        None if m.target is None else _map_id(m.target, mp),
        m.fresh,
    )


def _region_script(x: Tree, y: Tree) -> tuple[list, bool]:
    labels = sorted(x.leaves)
    fwd = {v: i + 1 for i, v in enumerate(labels)}
    inv = {i + 1: v for i, v in enumerate(labels)}
    rx = Tree(_relabel_struct(x.root, fwd))
    ry = Tree(_relabel_struct(y.root, fwd))
    moves, exact = _solve_region(rx, ry)
    return [_map_move(m, inv) for m in moves], exact


# -- decomposition -----------------------------------------------------------


def _region_struct(t: Tree, top, tokens: dict):
    """Structure of ``top`` with every shared sub-cluster replaced by its token."""

    def walk(s):
        if isinstance(s, int):
            return s
        nid = node_id(s)
        if nid != top and nid in tokens:
            return tokens[nid]
        return [walk(c) for c in s]

    return walk(t.subtree(top))


def _expand(nid, back: dict):
    if isinstance(nid, int):
        return back.get(nid, nid)
    out = set()
    for v in nid:
        e = back.get(v, v)
        if isinstance(e, frozenset):
            out |= e
        else:
            out.add(e)
    return frozenset(out)


def _expand_move(m: Move, back: dict) -> Move:
    return Move(
        _expand(m.subject, back),
        m.direction,
        None if m.target is None else _expand(m.target, back),
        m.fresh,
    )


def shared_clusters(a: Tree, b: Tree) -> list[frozenset]:
    """Internal clusters present in both trees (root included), smallest first."""
    common = set(a.internal_nodes()) & set(b.internal_nodes())
    return sorted(common, key=lambda c: (len(c), sorted(c)))


def tree_distance(a: Tree, b: Tree) -> DistanceResult:
    """Move distance from ``a`` to ``b`` together with a script realizing it.

    Raises IncomparableTreesError when the leaf sets differ.
    """
    if a.leaves != b.leaves:
        raise IncomparableTreesError("trees have different leaf sets")
    if a == b:
        return DistanceResult(0, MoveSequence(()), ())
    shared = shared_clusters(a, b)
    tokens, back = {}, {}
    steps, trace = [], []
    next_token = -1
    for c in shared:
        sub_a = _region_struct(a, c, tokens)
        sub_b = _region_struct(b, c, tokens)
        ra, rb = Tree(sub_a), Tree(sub_b)
        if ra != rb:
            moves, exact = _region_script(ra, rb)
            steps.extend(_expand_move(m, back) for m in moves)
            trace.append(TraceStep(c, ra.leaves, len(moves), exact))
        tokens[c] = next_token
        back[next_token] = c
        next_token -= 1
    script = MoveSequence(tuple(steps))
    return DistanceResult(len(steps), script, tuple(trace))


def isomorphic_mapping_distance(a: Tree, b: Tree) -> DistanceResult:
    """Distance between two trees of the same unlabeled shape.

    Raises ValueError when the shapes differ; use :func:`tree_distance`
    for the general case.
    """
    from .mcat import shape_code

    if a.leaves != b.leaves:
        raise IncomparableTreesError("trees have different leaf sets")
    if shape_code(a.root) != shape_code(b.root):
        raise ValueError("trees are not shape-isomorphic")
    return tree_distance(a, b)


def distance(a: Tree, b: Tree) -> int:
    """Symmetric move distance (value only)."""
    return tree_distance(a, b).value
