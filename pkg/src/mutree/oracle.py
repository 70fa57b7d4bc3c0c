"""Ground truth for small instances: BFS move distance, exhaustive tree
enumeration, exact median/closest search, and the seeded instance generator."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .tree import IncomparableTreesError, Tree, apply_move, canonicalize, enumerate_moves, neighbors

MAX_ENUM_LEAVES = 6


class RadiusExceededError(RuntimeError):
    """The BFS frontier passed ``cap`` without reaching the target."""


def bfs_distance(a: Tree, b: Tree, cap: int = 12) -> int:
    """Exact minimum number of moves from ``a`` to ``b`` (bidirectional BFS).

    States are canonical trees, so sibling order never splits a state.
    """
    if a.leaves != b.leaves:
        raise IncomparableTreesError("trees have different leaf sets")
    if a == b:
        return 0
    dist = [{a: 0}, {b: 0}]
    frontier = [[a], [b]]
    radius = 0
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        seen, other = dist[side], dist[1 - side]
        nxt = []
        best = None
        for t in frontier[side]:
            d = seen[t] + 1
            for _, u in neighbors(t):
                if u in seen:
                    continue
                if u in other:
                    tot = d + other[u]
                    best = tot if best is None else min(best, tot)
                seen[u] = d
                nxt.append(u)
        if best is not None:
            return best
        frontier[side] = nxt
        radius += 1
        if radius > cap:
            raise RadiusExceededError(f"distance exceeds {cap}")
    raise RadiusExceededError("target unreachable")  # pragma: no cover


@lru_cache(maxsize=None)
def _shapes(labels: frozenset, cap: int) -> tuple:
    """All canonical structures on ``labels`` with height <= cap."""
    if len(labels) == 1:
        return (next(iter(labels)),)
    if cap <= 0:
        return ()
    out = []
    for blocks in _partitions(sorted(labels)):
        if len(blocks) < 2:
            continue
        options = [_shapes(frozenset(b), cap - 1) for b in blocks]
        if any(not o for o in options):
            continue
        for combo in _product(options):
            out.append(canonicalize(list(combo)))
    return tuple(sorted(set(out), key=repr))


def _partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _product(options):
    if not options:
        yield ()
        return
    for head in options[0]:
        for tail in _product(options[1:]):
            yield (head,) + tail


def enumerate_trees(n: int, height_cap: int | None = None) -> list[Tree]:
    """Every canonical tree on leaves 1..n with height <= height_cap."""
    if n > MAX_ENUM_LEAVES:
        raise ValueError(f"enumeration is limited to n <= {MAX_ENUM_LEAVES}")
    if n < 2:
        raise ValueError("trees need at least two leaves")
    cap = n - 1 if height_cap is None else height_cap
    trees = [Tree(s, _canonical=True) for s in _shapes(frozenset(range(1, n + 1)), cap)]
    return sorted(trees, key=lambda t: t.newick)


class MoveGraph:
    """All trees on 1..n with the move adjacency, for all-pairs distances."""

    def __init__(self, n: int):
        self.trees = enumerate_trees(n)
        self.index = {t: i for i, t in enumerate(self.trees)}
        self.adj = [sorted({self.index[u] for _, u in neighbors(t)}) for t in self.trees]
        self._rows = {}

    def distances_from(self, t: Tree) -> list[int]:
        src = self.index[t]
        if src not in self._rows:
            dist = [-1] * len(self.trees)
            dist[src] = 0
            q = deque([src])
            while q:
                u = q.popleft()
                for w in self.adj[u]:
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        q.append(w)
            self._rows[src] = dist
        return self._rows[src]

    def distance(self, a: Tree, b: Tree) -> int:
        return self.distances_from(a)[self.index[b]]


@lru_cache(maxsize=None)
def move_graph(n: int) -> MoveGraph:
    return MoveGraph(n)


def _distance_row(t: Tree, universe: list[Tree]) -> list[int]:
    n = t.n_leaves
    if t.leaves == frozenset(range(1, n + 1)) and n <= MAX_ENUM_LEAVES:
        g = move_graph(n)
        row = g.distances_from(t)
        return [row[g.index[u]] for u in universe]
    return [bfs_distance(t, u, cap=4 * n * n) for u in universe]


def _exact(trees, universe, reduce):
    if not universe:
        raise ValueError("empty universe")
    if not trees:
        raise ValueError("no input trees")
    rows = [_distance_row(t, universe) for t in trees]
    best = None
    for j, u in sorted(enumerate(universe), key=lambda ju: ju[1].newick):
        score = reduce(r[j] for r in rows)
        if best is None or score < best[1]:
            best = (u, score)
    return best


def exact_median(trees: list[Tree], universe: list[Tree]) -> tuple[Tree, int]:
    """Tree of ``universe`` minimizing the summed BFS distance to ``trees``."""
    return _exact(trees, universe, sum)


def exact_closest(trees: list[Tree], universe: list[Tree]) -> tuple[Tree, int]:
    """Tree of ``universe`` minimizing the largest BFS distance to ``trees``."""
    return _exact(trees, universe, max)


def bfs_swap_distance(pi, sigma) -> int:
    """Fewest transpositions between two permutations, by plain BFS."""
    src, dst = tuple(pi), tuple(sigma)
    if len(src) != len(dst):
        raise ValueError("permutations differ in length")
    seen = {src: 0}
    q = deque([src])
    while q:
        p = q.popleft()
        if p == dst:
            return seen[p]
        for i, j in combinations(range(len(p)), 2):
            nxt = list(p)
            nxt[i], nxt[j] = nxt[j], nxt[i]
            nxt = tuple(nxt)
            if nxt not in seen:
                seen[nxt] = seen[p] + 1
                q.append(nxt)
    raise ValueError("not permutations of the same items")  # pragma: no cover


# -- seeded instances ----------------------------------------------------------


@dataclass(frozen=True)
class InstanceSpec:
    """``k`` trees on leaves ``1..n`` with height at most ``height_cap``
    (default ceil(log2 n))."""

    k: int
    n: int
    height_cap: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.height_cap is None:
            object.__setattr__(self, "height_cap", max(1, math.ceil(math.log2(self.n))))
        if self.height_cap < 1:
            raise ValueError("height cap must be at least 1")

    def header(self) -> str:
        return f"k={self.k} n={self.n} height_cap={self.height_cap} seed={self.seed}"


def _random_structure(labels: list[int], budget: int, rng: random.Random):
    """Split ``labels`` into a random partition with a uniformly drawn number
    of non-empty blocks and recurse.  With one level of height left the
    node becomes a single bracket, so the cap always holds.
    """
    if len(labels) == 1:
        return labels[0]
    if budget == 1 or len(labels) == 2:
        return list(labels)
    k = rng.randint(2, len(labels))
    order = labels[:]
    rng.shuffle(order)
    blocks = [[v] for v in order[:k]]
    for v in order[k:]:
        blocks[rng.randrange(k)].append(v)
    return [_random_structure(sorted(b), budget - 1, rng) for b in blocks]


def random_tree(n: int, height_cap: int, rng: random.Random) -> Tree:
    t = Tree(_random_structure(list(range(1, n + 1)), height_cap, rng))
    assert t.height <= height_cap
    return t


def random_instance(spec: InstanceSpec) -> list[Tree]:
    """``spec.k`` seeded random trees; identical seeds give identical output."""
    rng = random.Random(spec.seed)
    return [random_tree(spec.n, spec.height_cap, rng) for _ in range(spec.k)]


def perturbed_instance(spec: InstanceSpec, moves: int) -> list[Tree]:
    """``spec.k`` trees, each ``moves`` random moves away from one random
    base tree (moves that would break the height cap are skipped).

    Mimics a set of posterior samples around a common estimate.
    """
    rng = random.Random(spec.seed)
    base = random_tree(spec.n, spec.height_cap, rng)
    out = []
    for _ in range(spec.k):
        t = base
        for _ in range(moves):
            opts = enumerate_moves(t)
            rng.shuffle(opts)
            for m in opts:
                u = apply_move(t, m)
                if u.height <= spec.height_cap:
                    t = u
                    break
        out.append(t)
    return out
