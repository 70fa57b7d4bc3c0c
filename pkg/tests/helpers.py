"""Shared fixtures and hypothesis strategies."""

import random

from hypothesis import strategies as st

from mutree import Tree, parse_newick
from mutree.oracle import random_tree

WORKED_P = "((1(2(3,4)))(5,6))"
WORKED_Q = "((1(2(5,4)))(3,6))"


def worked_pair() -> tuple[Tree, Tree]:
    return parse_newick(WORKED_P), parse_newick(WORKED_Q)


@st.composite
def trees(draw, min_leaves=2, max_leaves=8, max_height=None):
    n = draw(st.integers(min_leaves, max_leaves))
    cap = max_height or draw(st.integers(1, max(1, n - 1)))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(n, cap, random.Random(seed))


@st.composite
def tree_pairs(draw, min_leaves=2, max_leaves=7, max_height=None):
    a = draw(trees(min_leaves, max_leaves, max_height))
    cap = max_height or draw(st.integers(1, max(1, a.n_leaves - 1)))
    seed = draw(st.integers(0, 2**32 - 1))
    return a, random_tree(a.n_leaves, cap, random.Random(seed))


def shuffled(t: Tree, rng: random.Random):
    """Same tree with every sibling list shuffled (nested lists, not canonical)."""

    def walk(s):
        if isinstance(s, int):
            return s
        kids = [walk(c) for c in s]
        rng.shuffle(kids)
        return kids

    return walk(t.root)


def newick_of(s) -> str:
    if isinstance(s, int):
        return str(s)
    return "(" + ",".join(newick_of(c) for c in s) + ")"
