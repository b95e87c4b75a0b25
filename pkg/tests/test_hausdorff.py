import csv
import io
import json
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from descprox import (DescribedCollection, DescribedSet, ball, descriptive_distance,
                      descriptive_hausdorff_distance, distance_matrix, hausdorff_distance,
                      verify_topology_axioms)
from descprox.errors import DimensionMismatch, SuiteMismatch, UnknownId
from descprox.hausdorff import BallCover, check_open_family, generated_family, matrix_to_csv

from conftest import brute_hausdorff


def test_hausdorff_examples():
    Q = [(0.0, 0.0), (1.0, 0.0)]
    assert hausdorff_distance(Q, Q) == 0
    assert hausdorff_distance([(0,)], [(3,)]) == 3
    S = [(0.0, 1.0), (4.0, 0.0)]
    assert hausdorff_distance(Q, S) == brute_hausdorff(Q, S) == 3.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        hausdorff_distance([(0, 0)], [(0, 0, 0)])


def test_descriptive_hausdorff_examples():
    A = DescribedSet.from_vectors("A", [(304,)])
    B = DescribedSet.from_vectors("B", [(304,)])
    assert descriptive_hausdorff_distance(A, B) == 0
    A = DescribedSet.from_vectors("A", [(0,), (10,)])
    B = DescribedSet.from_vectors("B", [(0,)])
    assert descriptive_hausdorff_distance(A, B) == 10
    assert descriptive_distance(A, B) == 0  # the inf/sup gap


def test_descriptive_hausdorff_suite_mismatch():
    A = DescribedSet.from_vectors("A", [(0,)], names=["a"])
    B = DescribedSet.from_vectors("B", [(0,)], names=["b"])
    with pytest.raises(SuiteMismatch):
        descriptive_hausdorff_distance(A, B)


def random_collection(rng, k=5, dim=2):
    return DescribedCollection(
        DescribedSet.from_vectors(f"S{i}", rng.normal(size=(rng.integers(1, 5), dim)))
        for i in range(k)
    )


def test_ball_extremes():
    coll = random_collection(np.random.default_rng(0))
    diam = distance_matrix(coll).max()
    assert ball(coll, "S0", diam + 1).members == set(coll.ids)
    assert ball(coll, "S0", 1e-300).members == {"S0"}
    with pytest.raises(UnknownId):
        ball(coll, "nope", 1.0)


def test_ball_matches_brute_force_filter():
    rng = np.random.default_rng(7)
    for _ in range(20):
        coll = random_collection(rng)
        pts = {m.id: m.feature_matrix.tolist() for m in coll}
        pair = [brute_hausdorff(pts[a], pts[b]) for a in coll.ids for b in coll.ids if a < b]
        eps = statistics.median(pair)
        for c in coll.ids:
            want = {b for b in coll.ids if brute_hausdorff(pts[c], pts[b]) < eps}
            assert ball(coll, c, eps).members == want


def _clustered():
    # two far-apart clusters of two members each
    return DescribedCollection([
        DescribedSet.from_vectors("a1", [(0.0,)]), DescribedSet.from_vectors("a2", [(0.1,)]),
        DescribedSet.from_vectors("b1", [(10.0,)]), DescribedSet.from_vectors("b2", [(10.1,)]),
    ])


def test_axioms_empty_ball_list():
    coll = _clustered()
    rep = verify_topology_axioms(coll, [])
    assert rep.ok
    assert rep.family == [[], sorted(coll.ids)]


def test_axioms_two_disjoint_balls():
    coll = _clustered()
    balls = [ball(coll, "a1", 1.0), ball(coll, "b1", 1.0)]
    assert balls[0].members.isdisjoint(balls[1].members)
    rep = verify_topology_axioms(coll, balls)
    assert rep.ok and len(rep.family) == 4


def test_axioms_single_ball():
    coll = _clustered()
    rep = verify_topology_axioms(coll, [ball(coll, "a1", 1.0)])
    assert rep.ok and rep.family == [[], ["a1", "a2"], sorted(coll.ids)]


def test_axioms_report_inconsistent_ball():
    coll = _clustered()
    forged = BallCover("a1", 1.0, frozenset({"a1"}))
    rep = verify_topology_axioms(coll, [forged])
    assert not rep.passed["ball_consistency"]
    assert rep.counterexamples["ball_consistency"] == ["a1"]


def test_open_family_counterexamples():
    rep = check_open_family({"x", "y", "z"}, [set(), {"x"}, {"y"}, {"x", "y", "z"}])
    assert not rep.passed["union"]
    assert rep.counterexamples["union"] == [[["x"], ["y"]]]
    assert rep.passed["intersection"]
    rep = check_open_family({"x", "y"}, [{"x"}])
    assert not rep.passed["whole_and_empty"]


def test_axiom_report_json_roundtrip():
    coll = _clustered()
    rep = verify_topology_axioms(coll, [ball(coll, "a1", 1.0)])
    doc = json.loads(rep.to_json())
    assert doc["ok"] is True
    assert set(doc["axioms"]) == {"ball_consistency", "whole_and_empty", "union", "intersection"}
    assert all(v["counterexamples"] == [] for v in doc["axioms"].values())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_topology_for_any_ball_family(seed):
    rng = np.random.default_rng(seed)
    coll = random_collection(rng, k=int(rng.integers(1, 7)), dim=int(rng.integers(1, 4)))
    balls = [ball(coll, c, float(rng.uniform(0.1, 3))) for c in coll.ids if rng.random() < 0.6]
    rep = verify_topology_axioms(coll, balls)
    assert rep.ok, rep.counterexamples
    # the generated family really is closed (independent re-check)
    fam = {frozenset(s) for s in rep.family}
    assert all(a | b in fam and a & b in fam for a in fam for b in fam)


def test_distance_matrix_independent_of_partitioning():
    coll = random_collection(np.random.default_rng(3), k=9, dim=3)
    serial = distance_matrix(coll)
    assert np.array_equal(serial, distance_matrix(coll, workers=4))
    assert np.array_equal(serial, serial.T)


def test_matrix_csv_format():
    text = matrix_to_csv(["a", "b"], np.array([[0.0, 1 / 3], [1 / 3, 0.0]]))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows == [["", "a", "b"], ["a", "0", "0.333333"], ["b", "0.333333", "0"]]


def test_indefinite_topology_balls_contain_everything():
    tau = 1e-9
    base = np.array([[1.0, 2.0], [3.0, 4.0]])
    coll = DescribedCollection(
        DescribedSet.from_vectors(f"S{i}", base + i * 1e-12) for i in range(5)
    )
    assert distance_matrix(coll).max() < tau
    for c in coll.ids:
        for r in (tau, 2 * tau, 1.0):
            assert ball(coll, c, r).members == set(coll.ids)


# a 0.01 grid keeps squared coordinate gaps clear of floating-point underflow,
# so a zero distance really means equal descriptions
coords = st.integers(-5000, 5000).map(lambda k: k / 100)


@st.composite
def collections(draw):
    dim = draw(st.integers(1, 3))
    k = draw(st.integers(2, 6))
    sets = [draw(st.lists(st.tuples(*[coords] * dim), min_size=1, max_size=6)) for _ in range(k)]
    return [DescribedSet.from_vectors(f"S{i}", s) for i, s in enumerate(sets)]


@settings(max_examples=150, deadline=None)
@given(collections())
def test_metric_axioms(members):
    for A in members:
        for B in members:
            ab = descriptive_hausdorff_distance(A, B)
            assert ab == descriptive_hausdorff_distance(B, A)
            exact_equal = set(map(tuple, A.feature_matrix)) == set(map(tuple, B.feature_matrix))
            assert (ab == 0) == exact_equal
            assert descriptive_distance(A, B) <= ab
            for C in members:
                ac = descriptive_hausdorff_distance(A, C)
                bc = descriptive_hausdorff_distance(B, C)
                assert ac <= (ab + bc) * (1 + 1e-12)
