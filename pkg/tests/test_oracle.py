import math
import random

import pytest

from helpers import worked_pair
from mutree import Tree, height, is_equal, median_lower_bound, parse_newick, serialize_newick
from mutree.oracle import (
    InstanceSpec,
    RadiusExceededError,
    bfs_distance,
    enumerate_trees,
    exact_closest,
    exact_median,
    move_graph,
    random_instance,
)


def test_bfs_identity_and_worked_pair():
    p, q = worked_pair()
    assert bfs_distance(p, p) == 0
    assert bfs_distance(p, q) == 8


def test_bfs_radius():
    p, q = worked_pair()
    with pytest.raises(RadiusExceededError):
        bfs_distance(p, q, cap=3)


def test_enumerate_small():
    assert [t.newick for t in enumerate_trees(2)] == ["(1,2)"]
    assert sorted(t.newick for t in enumerate_trees(3, 2)) == sorted(
        ["(1,2,3)", "((1,2),3)", "((1,3),2)", "(1,(2,3))"]
    )
    assert len(enumerate_trees(4)) == 26
    assert len(enumerate_trees(5)) == 236
    assert len(enumerate_trees(5, 2)) == 51


def test_enumerate_no_duplicates_and_cap():
    trees = enumerate_trees(5, 3)
    assert len({serialize_newick(t) for t in trees}) == len(trees)
    assert all(height(t) <= 3 for t in trees)


def test_enumerate_limit():
    with pytest.raises(ValueError):
        enumerate_trees(7)


def test_metric_on_n4_universe():
    g = move_graph(4)
    u = enumerate_trees(4)
    d = {(a, b): g.distance(a, b) for a in u for b in u}
    for a in u:
        for b in u:
            assert d[a, b] == d[b, a]
            assert (d[a, b] == 0) == is_equal(a, b)
            assert d[a, b] <= 2 * 4 * max(height(a), height(b))
            for c in u[::3]:
                assert d[a, c] <= d[a, b] + d[b, c]


def test_exact_median_trivial():
    u = enumerate_trees(4)
    t = parse_newick("((1,2),3,4)")
    assert exact_median([t, t, t], u) == (t, 0)
    a, b = parse_newick("((1,2),3,4)"), parse_newick("((1,3),(2,4))")
    best, score = exact_median([a, b], u)
    assert score == bfs_distance(a, b)


def test_exact_optima_above_bounds():
    u = enumerate_trees(4)
    rng = random.Random(0)
    for _ in range(10):
        ts = rng.sample(u, 3)
        _, med = exact_median(ts, u)
        _, clo = exact_closest(ts, u)
        assert med >= median_lower_bound(ts)
        assert clo >= max(bfs_distance(a, b) for a in ts for b in ts) / 2


def test_exact_empty_universe():
    with pytest.raises(ValueError):
        exact_median([parse_newick("(1,2)")], [])


def test_instance_spec_defaults():
    assert InstanceSpec(4, 10).height_cap == math.ceil(math.log2(10)) == 4
    assert InstanceSpec(4, 20).height_cap == 5
    with pytest.raises(ValueError):
        InstanceSpec(0, 10)
    with pytest.raises(ValueError):
        InstanceSpec(4, 2, height_cap=0)


def test_random_instance_deterministic():
    spec = InstanceSpec(4, 10, seed=42)
    a, b = random_instance(spec), random_instance(spec)
    assert a == b
    assert len(a) == 4
    assert all(t.leaves == frozenset(range(1, 11)) and height(t) <= 4 for t in a)
    assert random_instance(InstanceSpec(4, 10, seed=43)) != a


def test_random_instance_twenty_leaves():
    ts = random_instance(InstanceSpec(4, 20, seed=1))
    assert len(ts) == 4 and all(t.n_leaves == 20 and height(t) <= 5 for t in ts)


def test_height_cap_respected():
    rng_specs = [InstanceSpec(3, n, height_cap=h, seed=s) for n in (2, 5, 13) for h in (1, 2, 3) for s in range(5)]
    for spec in rng_specs:
        for t in random_instance(spec):
            assert height(t) <= spec.height_cap
            assert isinstance(t, Tree)
