"""Consensus trees for the median (min-sum) and closest (min-max) objectives.

Two constructive heuristics are provided: repeated contraction of the
common almost v-tree of all inputs, and repeated replacement of the
closest pair by a tree halfway along the move script between them.
"""

from __future__ import annotations

import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .distance import DistanceResult, tree_distance
from .mcat import solve_mcat_many
from .tree import IncomparableTreesError, Tree, contract, replay

METHODS = ("mcat", "midpoint")
OBJECTIVES = ("median", "closest")


def n_threads() -> int:
    """Worker count: ``MUTREE_THREADS`` if set, else the available cores."""
    env = os.environ.get("MUTREE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _pair_value(ab):
    return tree_distance(*ab).value


class DistanceCache:
    """Memoized tree distances; values are symmetric, scripts are not."""

    def __init__(self):
        self._results: dict = {}
        self._values: dict = {}

    def result(self, a: Tree, b: Tree) -> DistanceResult:
        key = (a, b)
        if key not in self._results:
            r = tree_distance(a, b)
            self._results[key] = r
            self._values[frozenset((a, b))] = r.value
        return self._results[key]

    def value(self, a: Tree, b: Tree) -> int:
        if a == b:
            return 0
        key = frozenset((a, b))
        if key not in self._values:
            self._values[key] = self.result(a, b).value
        return self._values[key]

    def prefetch(self, pairs, threads: int | None = None):
        todo = []
        seen = set()
        for a, b in pairs:
            k = frozenset((a, b))
            if a != b and k not in self._values and k not in seen:
                seen.add(k)
                todo.append((a, b))
        threads = threads or n_threads()
        if threads > 1 and len(todo) > 8:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                vals = list(ex.map(_pair_value, todo, chunksize=max(1, len(todo) // (4 * threads))))
        else:
            vals = [self.result(a, b).value for a, b in todo]
        for (a, b), v in zip(todo, vals):
            self._values[frozenset((a, b))] = v


def _check(trees):
    trees = list(trees)
    if not trees:
        raise ValueError("empty tree collection")
    leaves = trees[0].leaves
    if any(t.leaves != leaves for t in trees):
        raise IncomparableTreesError("trees have different leaf sets")
    return trees


def pairwise_distances(trees, cache: DistanceCache | None = None, threads: int | None = None) -> np.ndarray:
    trees = _check(trees)
    cache = cache or DistanceCache()
    k = len(trees)
    cache.prefetch([(trees[i], trees[j]) for i in range(k) for j in range(i + 1, k)], threads)
    d = np.zeros((k, k), dtype=int)
    for i in range(k):
        for j in range(i + 1, k):
            d[i, j] = d[j, i] = cache.value(trees[i], trees[j])
    return d


def median_score(candidate: Tree, trees, cache: DistanceCache | None = None) -> int:
    cache = cache or DistanceCache()
    return sum(cache.value(candidate, t) for t in _check(trees))


def closest_score(candidate: Tree, trees, cache: DistanceCache | None = None) -> int:
    cache = cache or DistanceCache()
    return max(cache.value(candidate, t) for t in _check(trees))


def median_lower_bound(trees, cache: DistanceCache | None = None) -> Fraction:
    """Sum of pairwise distances over k - 1 (0 for fewer than two trees)."""
    trees = list(trees)
    if len(trees) < 2:
        return Fraction(0)
    d = pairwise_distances(trees, cache)
    return Fraction(int(np.triu(d, 1).sum()), len(trees) - 1)


def closest_lower_bound(trees, cache: DistanceCache | None = None) -> Fraction:
    """Half the largest pairwise distance (0 for fewer than two trees)."""
    trees = list(trees)
    if len(trees) < 2:
        return Fraction(0)
    return Fraction(int(pairwise_distances(trees, cache).max()), 2)


# -- midpoint merging ---------------------------------------------------------


@dataclass(frozen=True)
class MergeStep:
    first: Tree
    second: Tree
    merged: Tree
    distance: int
    to_first: int
    to_second: int


def midpoint(a: Tree, b: Tree, cache: DistanceCache | None = None) -> tuple[Tree, int]:
    """Tree after the first ceil(d/2) moves of the script from ``a`` to ``b``."""
    cache = cache or DistanceCache()
    r = cache.result(a, b)
    h = math.ceil(r.value / 2)
    return replay(a, r.script.steps[:h]), h


def midpoint_consensus(trees, cache: DistanceCache | None = None, return_steps: bool = False):
    """Merge the closest pair into its midpoint until one tree is left.

    Ties between pairs go to the lexicographically smallest index pair.
    """
    pool = _check(trees)
    cache = cache or DistanceCache()
    steps = []
    while len(pool) > 1:
        k = len(pool)
        cache.prefetch([(pool[i], pool[j]) for i in range(k) for j in range(i + 1, k)])
        best = None
        for i in range(k):
            for j in range(i + 1, k):
                v = cache.value(pool[i], pool[j])
                if best is None or v < best[0]:
                    best = (v, i, j)
        d, i, j = best
        mid, h = midpoint(pool[i], pool[j], cache)
        steps.append(MergeStep(pool[i], pool[j], mid, d, h, d - h))
        pool[i] = mid
        del pool[j]
    return (pool[0], steps) if return_steps else pool[0]


# -- common almost v-tree contraction -----------------------------------------


def _expand(s, parts: dict):
    if isinstance(s, int):
        return _expand(parts[s], parts) if s in parts else s
    return [_expand(c, parts) for c in s]


def _lists(s):
    return s if isinstance(s, int) else [_lists(c) for c in s]


def _majority_layout(work: list[Tree]):
    """Hierarchy over the remaining elements from the clusters that most
    inputs share, accepted greedily while they stay nested or disjoint."""
    elements = sorted(work[0].leaves)
    k = len(work)
    counts = Counter()
    for t in work:
        root = t.root_id
        for c in t.internal_nodes():
            if c != root:
                counts[c] += 1
    need = 1 if k == 1 else 2
    order = sorted(
        (c for c, n in counts.items() if n >= need),
        key=lambda c: (-counts[c], -len(c), sorted(c)),
    )
    accepted = []
    for c in order:
        if all(not (c & a) or c <= a or a <= c for a in accepted):
            accepted.append(c)
    accepted.sort(key=len, reverse=True)

    def build(cl):
        inner = [c for c in accepted if c < cl]
        tops = [c for c in inner if not any(c < d for d in inner)]
        covered = frozenset().union(*tops) if tops else frozenset()
        return [build(c) for c in tops] + sorted(cl - covered)

    return build(frozenset(elements))


def mcat_consensus(trees, return_parts: bool = False):
    """Contract the common almost v-tree of all inputs until none with two
    or more leaves is left, then lay out what remains by shared clusters.

    Each contracted structure is taken with the leaf arrangement seen in
    most inputs (first input on ties).
    """
    work = _check(trees)
    parts = {}
    token = -1
    while len(set(work)) > 1:
        common, spots = solve_mcat_many(work)
        if common is None or common.n_leaves < 2:
            break
        labelled = Counter()
        first = {}
        for t, spot in zip(work, spots):
            s = spot.as_tree(t)
            labelled[s] += 1
            first.setdefault(s, len(first))
        chosen = min(labelled, key=lambda s: (-labelled[s], first[s]))
        parts[token] = _lists(chosen.root)
        work = [_contract_spot(t, spot, token) for t, spot in zip(work, spots)]
        token -= 1
        if all(t.n_leaves == 1 for t in work):
            break
    if len(set(work)) == 1:
        layout = _lists(work[0].root)
    else:
        layout = _majority_layout(work)
    result = Tree(_expand(layout, parts))
    return (result, parts) if return_parts else result


def _contract_spot(t: Tree, spot, token: int) -> Tree:
    return contract(t, spot.v, spot.removed, token)


# -- reports -----------------------------------------------------------------


@dataclass
class ConsensusReport:
    candidate: Tree
    method: str
    objective: str
    median_score: int
    closest_score: int
    median_lb: Fraction
    closest_lb: Fraction
    pairwise: np.ndarray
    per_input_scores: list
    input_median_scores: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def median_gap(self) -> Fraction:
        return self.median_score - self.median_lb

    @property
    def closest_gap(self) -> Fraction:
        return self.closest_score - self.closest_lb

    @property
    def score(self) -> int:
        return self.median_score if self.objective == "median" else self.closest_score

    @property
    def gap(self) -> Fraction:
        return self.median_gap if self.objective == "median" else self.closest_gap

    @property
    def better_than_inputs(self) -> bool:
        """Candidate's median score is no worse than that of every input."""
        return not self.input_median_scores or self.median_score <= min(self.input_median_scores)

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.newick,
            "method": self.method,
            "objective": self.objective,
            "n_trees": len(self.per_input_scores),
            "n_leaves": self.candidate.n_leaves,
            "score": self.score,
            "gap": float(self.gap),
            "median_score": self.median_score,
            "closest_score": self.closest_score,
            "median_lb": float(self.median_lb),
            "closest_lb": float(self.closest_lb),
            "median_lb_exact": str(self.median_lb),
            "closest_lb_exact": str(self.closest_lb),
            "median_gap": float(self.median_gap),
            "closest_gap": float(self.closest_gap),
            "per_input_scores": [int(v) for v in self.per_input_scores],
            "better_than_inputs": bool(self.better_than_inputs),
            "pairwise": self.pairwise.astype(int).tolist(),
            "timings_ms": {k: round(v * 1000.0, 3) for k, v in self.timings.items()},
        }


def build_consensus(trees, method: str = "mcat", cache: DistanceCache | None = None) -> Tree:
    if method == "mcat":
        return mcat_consensus(trees)
    if method == "midpoint":
        return midpoint_consensus(trees, cache)
    raise ValueError(f"method must be one of {METHODS}")


def consensus_report(trees, method: str = "mcat", objective: str = "median", cache=None) -> ConsensusReport:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    trees = _check(trees)
    cache = cache or DistanceCache()
    t0 = time.perf_counter()
    pw = pairwise_distances(trees, cache)
    t1 = time.perf_counter()
    cand = build_consensus(trees, method, cache)
    t2 = time.perf_counter()
    cache.prefetch([(cand, t) for t in trees])
    per = [cache.value(cand, t) for t in trees]
    t3 = time.perf_counter()
    k = len(trees)
    lb_med = Fraction(int(np.triu(pw, 1).sum()), k - 1) if k > 1 else Fraction(0)
    lb_clo = Fraction(int(pw.max()), 2) if k > 1 else Fraction(0)
    return ConsensusReport(
        candidate=cand,
        method=method,
        objective=objective,
        median_score=sum(per),
        closest_score=max(per),
        median_lb=lb_med,
        closest_lb=lb_clo,
        pairwise=pw,
        per_input_scores=per,
        input_median_scores=[int(v) for v in pw.sum(axis=1)],
        timings={"distance": t1 - t0, "consensus": t2 - t1, "scoring": t3 - t2},
    )


class ConsensusTree(BaseEstimator):
    """Estimator wrapper: ``fit`` builds the consensus of a tree collection.

    Parameters
    ----------
    method : {"mcat", "midpoint"}
    objective : {"median", "closest"}
        Objective reported by ``score`` and ``report_.gap``.
    """

    def __init__(self, method: str = "mcat", objective: str = "median"):
        self.method = method
        self.objective = objective

    def fit(self, X, y=None):
        trees = [_as_tree(x) for x in X]
        self.cache_ = DistanceCache()
        self.report_ = consensus_report(trees, self.method, self.objective, self.cache_)
        self.candidate_ = self.report_.candidate
        self.n_trees_ = len(trees)
        return self

    def predict(self, X=None) -> Tree:
        return self.candidate_

    def transform(self, X) -> np.ndarray:
        """Distance from the fitted candidate to every tree of ``X``."""
        return np.array([self.cache_.value(self.candidate_, _as_tree(x)) for x in X])

    def score(self, X, y=None) -> float:
        d = self.transform(X)
        return -float(d.sum() if self.objective == "median" else d.max())


def _as_tree(x) -> Tree:
    if isinstance(x, Tree):
        return x
    from .newick import parse_newick

    return parse_newick(str(x), strict=False)
