import json
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np
import pytest

from mutree import (
    ConsensusTree,
    IncomparableTreesError,
    closest_lower_bound,
    closest_score,
    consensus_report,
    mcat_consensus,
    median_lower_bound,
    median_score,
    midpoint_consensus,
    parse_newick,
    tree_distance,
)
from mutree.oracle import InstanceSpec, enumerate_trees, exact_closest, exact_median, random_instance

A = parse_newick("((1,2),(3,4),5)")
B = parse_newick("((1,3),(2,4),5)")
C = parse_newick("(((1,2),3),4,5)")


@pytest.mark.parametrize("build", [mcat_consensus, midpoint_consensus])
def test_single_and_identical(build):
    assert build([A]) == A
    assert build([B, B, B]) == B
    assert median_score(build([B, B, B]), [B, B, B]) == 0


@pytest.mark.parametrize("build", [mcat_consensus, midpoint_consensus])
def test_empty_input(build):
    with pytest.raises(ValueError):
        build([])


def test_mixed_leaf_sets():
    with pytest.raises(IncomparableTreesError):
        mcat_consensus([A, parse_newick("(1,2,3)")])


def test_scores_two_inputs():
    d = tree_distance(A, B).value
    assert median_score(A, [A, B]) == d
    assert closest_score(A, [A, B]) == d
    assert median_lower_bound([A, B]) == d


def test_bounds_trivial():
    assert median_lower_bound([A, A, A]) == 0
    assert closest_lower_bound([A, A]) == 0
    assert median_lower_bound([A]) == 0 and closest_lower_bound([A]) == 0
    assert isinstance(median_lower_bound([A, B, C]), Fraction)


def test_midpoint_two_trees():
    for a, b in [(A, B), (A, C), (B, C)]:
        d = tree_distance(a, b).value
        j, steps = midpoint_consensus([a, b], return_steps=True)
        d1, d2 = tree_distance(j, a).value, tree_distance(j, b).value
        assert d1 + d2 == d
        assert abs(d1 - d2) <= 1
        assert steps[0].distance == d and steps[0].to_first == d1


def test_closest_bound_met_by_midpoint_at_even_distance():
    d = tree_distance(A, B).value
    assert d % 2 == 0
    j = midpoint_consensus([A, B])
    assert closest_score(j, [A, B]) == closest_lower_bound([A, B]) == d // 2


def test_seeded_instance_against_exhaustive_optimum():
    ts = random_instance(InstanceSpec(4, 4, seed=42))
    u = enumerate_trees(4)
    _, med = exact_median(ts, u)
    _, clo = exact_closest(ts, u)
    assert (med, clo) == (3, 1)
    assert median_lower_bound(ts) == Fraction(8, 3)
    assert closest_lower_bound(ts) == 1
    for build in (mcat_consensus, midpoint_consensus):
        cand = build(ts)
        assert (median_score(cand, ts), closest_score(cand, ts)) == (4, 1)


def test_seeded_ten_leaf_instance():
    ts = random_instance(InstanceSpec(4, 10, seed=42))
    cand = mcat_consensus(ts)
    assert cand.leaves == ts[0].leaves
    assert median_score(cand, ts) == 17 >= median_lower_bound(ts)
    assert closest_score(cand, ts) == 7 >= closest_lower_bound(ts)


def test_mcat_consensus_deterministic():
    ts = random_instance(InstanceSpec(5, 12, seed=3))
    assert mcat_consensus(ts) == mcat_consensus(list(ts))


def test_mcat_consensus_keeps_common_part():
    ts = [
        parse_newick("(((1,2),3),(4,5),6)"),
        parse_newick("(((1,2),3),4,(5,6))"),
        parse_newick("((((1,2),3),4),5,6)"),
    ]
    cand = mcat_consensus(ts)
    assert frozenset({1, 2, 3}) in cand.internal_nodes()
    assert frozenset({1, 2}) in cand.internal_nodes()


def test_report_invariants_and_schema():
    ts = random_instance(InstanceSpec(4, 8, seed=5))
    schema = json.loads(resources.files("mutree").joinpath("schemas/consensus_report.schema.json").read_text())
    for method in ("mcat", "midpoint"):
        for objective in ("median", "closest"):
            rep = consensus_report(ts, method, objective)
            assert rep.median_score == sum(rep.per_input_scores)
            assert rep.closest_score == max(rep.per_input_scores)
            assert rep.median_score >= rep.median_lb
            assert rep.closest_score >= rep.closest_lb
            assert rep.pairwise.shape == (4, 4)
            assert np.array_equal(rep.pairwise, rep.pairwise.T)
            doc = rep.to_dict()
            jsonschema.validate(doc, schema)
            assert doc["score"] == (rep.median_score if objective == "median" else rep.closest_score)


def test_report_bad_objective():
    with pytest.raises(ValueError):
        consensus_report([A, B], "mcat", "mean")
    with pytest.raises(ValueError):
        consensus_report([A, B], "vote", "median")


def test_estimator():
    ts = random_instance(InstanceSpec(4, 8, seed=6))
    est = ConsensusTree(method="mcat", objective="closest").fit(ts)
    assert est.candidate_ == est.predict()
    assert est.score(ts) == -est.report_.closest_score
    assert list(est.transform(ts)) == est.report_.per_input_scores
    assert est.get_params() == {"method": "mcat", "objective": "closest"}
    est2 = ConsensusTree(method="midpoint").fit([t.newick for t in ts])
    assert est2.score(ts) == -est2.report_.median_score
