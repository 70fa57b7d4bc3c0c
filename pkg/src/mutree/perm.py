"""Permutations, cycle decompositions and the swap distance, plus the
correspondence between trees of height at most two and cycle sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .tree import Tree, height


class HeightError(ValueError):
    """The tree is taller than the operation allows."""


@dataclass(frozen=True)
class Permutation:
    """``images[i - 1]`` is the image of ``i``; a bijection on ``1..n``."""

    images: tuple

    def __init__(self, images: Sequence[int]):
        images = tuple(int(v) for v in images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError("not a permutation of 1..n")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def from_cycles(cls, cycles: "CycleSet | Sequence[Sequence[int]]") -> "Permutation":
        cyc = cycles.cycles if isinstance(cycles, CycleSet) else cycles
        n = sum(len(c) for c in cyc)
        img = [0] * n
        for c in cyc:
            for i, v in enumerate(c):
                img[v - 1] = c[(i + 1) % len(c)]
        return cls(img)

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i: int) -> int:
        return self.images[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for i, v in enumerate(self.images, start=1):
            inv[v - 1] = i
        return Permutation(inv)


@dataclass(frozen=True)
class CycleSet:
    """Cycles in canonical form: each starts at its smallest element and
    the cycles are sorted by that element."""

    cycles: tuple

    def __init__(self, cycles):
        canon = []
        for c in cycles:
            c = tuple(int(v) for v in c)
            if not c:
                raise ValueError("empty cycle")
            k = c.index(min(c))
            canon.append(c[k:] + c[:k])
        canon.sort(key=lambda c: c[0])
        flat = [v for c in canon for v in c]
        if len(flat) != len(set(flat)):
            raise ValueError("cycles overlap")
        object.__setattr__(self, "cycles", tuple(canon))

    def __len__(self):
        return len(self.cycles)

    @property
    def support(self) -> frozenset:
        return frozenset(v for c in self.cycles for v in c)

    def __str__(self):
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles)


def cycle_decomposition(pi: Permutation, sigma: Permutation) -> CycleSet:
    """Cycles of the map sending ``sigma[i]`` to ``pi[i]`` for every position i.

    With ``sigma`` the identity these are the ordinary cycles of ``pi``.
    """
    if len(pi) != len(sigma):
        raise ValueError("permutations differ in length")
    step = {s: p for s, p in zip(sigma.images, pi.images)}
    seen, cycles = set(), []
    for start in sorted(step):
        if start in seen:
            continue
        cyc, v = [], start
        while v not in seen:
            seen.add(v)
            cyc.append(v)
            v = step[v]
        cycles.append(cyc)
    return CycleSet(cycles)


def swap_distance(pi: Permutation, sigma: Permutation) -> int:
    """Fewest transpositions turning one permutation into the other: n - c."""
    return len(pi) - len(cycle_decomposition(pi, sigma))


def tree_to_cycles(t: Tree) -> CycleSet:
    """Brackets below the root become cycles and root leaves fixed points.

    A single-bracket tree is one cycle over all leaves.  Cycle order follows
    ascending labels.
    """
    h = height(t)
    if h > 2:
        raise HeightError(f"tree has height {h}, expected at most 2")
    if h == 1:
        return CycleSet([sorted(t.leaves)])
    return CycleSet([sorted(c) if isinstance(c, frozenset) else [c] for c in t.children(t.root_id)])


def cycles_to_tree(c: CycleSet) -> Tree:
    """Inverse of :func:`tree_to_cycles`; a single cycle or only fixed
    points give the single-bracket tree."""
    if isinstance(c, (list, tuple)):
        c = CycleSet(c)
    if len(c) == 1 or all(len(cyc) == 1 for cyc in c.cycles):
        return Tree(sorted(c.support))
    return Tree([list(cyc) if len(cyc) > 1 else cyc[0] for cyc in c.cycles])


def tree_permutation(t: Tree) -> Permutation:
    return Permutation.from_cycles(tree_to_cycles(t))


def height2_distance(a: Tree, b: Tree, *, cyclic_order: str = "best") -> int:
    """Swap distance between the permutations of two trees of height <= 2.

    A bracket fixes which elements share a cycle but not their cyclic
    order.  ``cyclic_order="ascending"`` uses the ascending order of
    :func:`tree_to_cycles`; the default ``"best"`` takes the minimum over
    all cyclic orders, which only depends on the two partitions: every
    connected component of the block-overlap graph with r blocks on one
    side and s on the other costs r + s - 2.
    """
    if a.leaves != b.leaves:
        from .tree import IncomparableTreesError

        raise IncomparableTreesError("trees have different leaf sets")
    ca, cb = tree_to_cycles(a), tree_to_cycles(b)
    if cyclic_order == "ascending":
        n = len(a.leaves)
        rel = _relabel(sorted(a.leaves))
        return swap_distance(
            Permutation.from_cycles([[rel[v] for v in c] for c in ca.cycles]),
            Permutation.from_cycles([[rel[v] for v in c] for c in cb.cycles]),
        ) if n else 0
    if cyclic_order != "best":
        raise ValueError("cyclic_order must be 'best' or 'ascending'")
    return _partition_distance([set(c) for c in ca.cycles], [set(c) for c in cb.cycles])


def _relabel(labels):
    return {v: i + 1 for i, v in enumerate(labels)}


def _partition_distance(p: list[set], q: list[set]) -> int:
    parent = list(range(len(p) + len(q)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, x in enumerate(p):
        for j, y in enumerate(q):
            if x & y:
                parent[find(i)] = find(len(p) + j)
    comps = len({find(i) for i in range(len(parent))})
    return len(p) + len(q) - 2 * comps
