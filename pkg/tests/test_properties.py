"""Property-based checks of the invariants."""

import itertools
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import newick_of, shuffled, tree_pairs, trees
from mutree import (
    Permutation,
    apply_move,
    bracket_sets,
    cycles_to_tree,
    enumerate_moves,
    height,
    is_equal,
    mcat_consensus,
    median_lower_bound,
    median_score,
    midpoint_consensus,
    parse_newick,
    serialize_newick,
    solve_mcat,
    swap_distance,
    tree_distance,
    tree_to_cycles,
)
from mutree.consensus import closest_lower_bound, closest_score
from mutree.mcat import shape_code
from mutree.oracle import bfs_distance, random_tree
from mutree.tree import inverse_move

FAST = settings(max_examples=60, deadline=None)


@FAST
@given(trees(max_leaves=14), st.randoms(use_true_random=False))
def test_canonical_form_ignores_sibling_order(t, rng):
    assert parse_newick(newick_of(shuffled(t, rng))) == t
    assert parse_newick(serialize_newick(t)) == t


@FAST
@given(trees(max_leaves=14))
def test_bracket_pairs_count_internal_nodes(t):
    assert serialize_newick(t).count("(") == t.n_internal == len(bracket_sets(t))
    assert all(len(b) >= 2 for b in bracket_sets(t))


@FAST
@given(trees(max_leaves=9), st.data())
def test_moves_keep_leaves_and_invert(t, data):
    moves = enumerate_moves(t)
    if not moves:
        return
    m = data.draw(st.sampled_from(moves))
    u = apply_move(t, m)
    assert u.leaves == t.leaves
    assert abs(u.n_internal - t.n_internal) <= 1
    assert apply_move(u, inverse_move(t, m)) == t


@FAST
@given(tree_pairs(max_leaves=9))
def test_distance_script_sound_and_symmetric(ab):
    a, b = ab
    r = tree_distance(a, b)
    assert r.script.replay(a) == b
    assert r.value == r.script.cost
    assert r.value == tree_distance(b, a).value
    assert (r.value == 0) == is_equal(a, b)
    assert r.value <= 2 * a.n_leaves * max(height(a), height(b))


@settings(max_examples=30, deadline=None)
@given(tree_pairs(min_leaves=3, max_leaves=5))
def test_distance_matches_oracle_small(ab):
    a, b = ab
    assert tree_distance(a, b).value == bfs_distance(a, b, cap=30)


@settings(max_examples=25, deadline=None)
@given(tree_pairs(max_leaves=8), st.integers(0, 2**32 - 1))
def test_triangle_inequality(ab, seed):
    a, b = ab
    c = random_tree(a.n_leaves, 3, random.Random(seed))
    assert tree_distance(a, c).value <= tree_distance(a, b).value + tree_distance(b, c).value


@FAST
@given(st.permutations(range(1, 7)), st.permutations(range(1, 7)), st.permutations(range(1, 7)))
def test_swap_distance_metric(p, q, r):
    p, q, r = Permutation(p), Permutation(q), Permutation(r)
    assert swap_distance(p, q) == swap_distance(q, p)
    assert (swap_distance(p, q) == 0) == (p == q)
    assert swap_distance(p, r) <= swap_distance(p, q) + swap_distance(q, r)


@FAST
@given(trees(min_leaves=3, max_leaves=12, max_height=2))
def test_cycle_round_trip(t):
    assert cycles_to_tree(tree_to_cycles(t)) == t


@FAST
@given(tree_pairs(max_leaves=10))
def test_mcat_solution_is_common(ab):
    a, b = ab
    sol = solve_mcat(a, b)
    if isinstance(sol.in_p.v, int):
        assert sol.leaf_count == 1
        return
    sa, sb = sol.in_p.as_tree(a), sol.in_q.as_tree(b)
    assert sa.leaves == sb.leaves and len(sa.leaves) == sol.leaf_count
    assert shape_code(sa.root) == shape_code(sb.root)


@settings(max_examples=20, deadline=None)
@given(st.lists(trees(min_leaves=6, max_leaves=6), min_size=1, max_size=4))
def test_consensus_keeps_leaves_and_respects_bounds(ts):
    ts = [t for t in ts]
    ts = [random_tree(6, 3, random.Random(i)) if i else t for i, t in enumerate(ts)]
    for build in (mcat_consensus, midpoint_consensus):
        cand = build(ts)
        assert cand.leaves == ts[0].leaves
        assert median_score(cand, ts) >= median_lower_bound(ts)
        assert closest_score(cand, ts) >= closest_lower_bound(ts)


@settings(max_examples=20, deadline=None)
@given(st.lists(trees(min_leaves=7, max_leaves=7, max_height=3), min_size=2, max_size=4, unique=True))
def test_midpoint_steps_lie_on_the_script(ts):
    _, steps = midpoint_consensus(ts, return_steps=True)
    for s in steps:
        d1 = tree_distance(s.merged, s.first).value
        d2 = tree_distance(s.merged, s.second).value
        assert d1 + d2 == s.distance
        assert abs(d1 - d2) <= 1


def test_pairs_helper_covers_equal_trees():
    # the strategies can produce identical trees; make sure the small
    # universes used above include them
    u = [parse_newick(x) for x in ("(1,2,3)", "((1,2),3)")]
    assert any(is_equal(a, b) for a, b in itertools.product(u, u))
