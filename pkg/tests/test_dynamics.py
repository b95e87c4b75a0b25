import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descprox.description import Probe, ProbeSuite
from descprox.dynamics import (
    CompactFamily,
    DescriptiveSystem,
    check_descriptive_sensitivity,
    check_descriptive_transitivity,
    check_periodic_density,
    classify_point,
    extension,
    first_return_table,
    orbit,
    periodic_members,
    periodic_set,
    set_map,
    set_power,
)
from descprox.errors import EmptySetError, StateOutOfSpace
from descprox.kernels import hausdorff


def logistic(n=256, r=4.0):
    return DescriptiveSystem.on_grid(0.0, 1.0, n, lambda x: r * x * (1 - x))


def abs_suite():
    return ProbeSuite([Probe("abs", abs)])


def random_system(rng, n_max=12, levels=3):
    n = rng.randint(1, n_max)
    states = list(range(n))
    table = {s: rng.randrange(n) for s in states}
    labels = {s: rng.randrange(levels) for s in states}
    suite = ProbeSuite([Probe("label", labels.__getitem__, integer_valued=True)])
    return DescriptiveSystem.on_states(states, table, suite, tau_eq=0.0), table, labels


def random_family(rng, sys, k_max=16):
    states = list(sys.states)
    return CompactFamily(sys, [rng.sample(states, rng.randint(1, len(states)))
                               for _ in range(rng.randint(1, k_max))])


def brute_first_return(table, phi, a, m_max, raw=False):
    cur = a
    for m in range(1, m_max + 1):
        cur = table[cur]
        if (cur == a) if raw else (phi[cur] == phi[a]):
            return m
    return None


# orbits

def test_identity_orbit():
    sys = DescriptiveSystem.on_states([1, 2, 3], lambda s: s)
    o = orbit(sys, 2, 3)
    assert o.states == (2, 2, 2, 2)
    assert o.descriptions == ((2.0,),) * 4


def test_logistic_orbit_from_half():
    sys = logistic()
    o = orbit(sys, 0.5, 2)
    assert o.states[0] == pytest.approx(0.5, abs=1 / 255)
    assert o.states[1] == pytest.approx(1.0)
    assert o.states[2] == pytest.approx(0.0)
    assert all(type(v) is float for d in o.descriptions for v in d)


def test_negation_orbit_is_involution():
    sys = DescriptiveSystem.on_grid(-1.0, 1.0, 9, lambda x: -x)
    o = orbit(sys, 0.25, 2)
    assert o.states == (0.25, -0.25, 0.25)


def test_orbit_invariants_and_errors():
    sys = logistic(64)
    o = orbit(sys, 0.3, 10)
    for a, b in zip(o.states, o.states[1:]):
        assert sys.f(a) == b
    assert o.descriptions == tuple((s,) for s in o.states)
    with pytest.raises(StateOutOfSpace):
        orbit(sys, 1.5, 2)
    with pytest.raises(StateOutOfSpace):
        orbit(DescriptiveSystem.on_states("ab", {"a": "b", "b": "a"}), "c", 1)


def test_table_leaving_space_rejected():
    with pytest.raises(StateOutOfSpace):
        DescriptiveSystem.on_states([0, 1], {0: 1, 1: 2})


# periodicity

def test_identity_points_are_fixed():
    sys = DescriptiveSystem.on_states(range(5), lambda s: s)
    for s in sys.states:
        assert classify_point(sys, s, 3).kind == "fixed"
    assert periodic_set(sys, 1) == sys.space


def test_negation_with_abs_probe_is_descriptively_fixed():
    sys = DescriptiveSystem.on_grid(-1.0, 1.0, 9, lambda x: -x, abs_suite())
    v = classify_point(sys, 0.25, 4)
    assert (v.kind, v.m, v.descriptive) == ("fixed", 1, True)
    raw = classify_point(sys, 0.25, 4, descriptive=False)
    assert (raw.kind, raw.m) == ("period-m", 2)
    assert sys.f(0.25) != 0.25


def test_logistic_zero_is_fixed():
    v = classify_point(logistic(), 0.0, 8)
    assert v.kind == "fixed" and v.m == 1


def test_classify_point_none_and_bad_m():
    sys = DescriptiveSystem.on_states([0, 1, 2], {0: 1, 1: 2, 2: 0})
    assert classify_point(sys, 0, 2).kind == "none"
    assert classify_point(sys, 0, 3).m == 3
    with pytest.raises(ValueError):
        classify_point(sys, 0, 0)


def test_logistic_per2_matches_brute_scan():
    sys = logistic()
    nodes = np.linspace(0.0, 1.0, 256)

    def step(x):
        return float(nodes[int(np.clip(np.rint(4 * x * (1 - x) * 255), 0, 255))])

    brute = {x for x in map(float, nodes) if abs(step(step(x)) - x) <= 1e-9}
    assert periodic_set(sys, 2) == brute
    assert periodic_set(sys, 2, "raw") <= periodic_set(sys, 2)


def test_periodic_set_mode_validated():
    with pytest.raises(ValueError):
        periodic_set(logistic(16), 1, "sideways")


def test_first_return_table_matches_classify():
    sys = DescriptiveSystem.on_grid(-1.0, 1.0, 21, lambda x: -x * 0.5, abs_suite())
    table = first_return_table(sys, 6)
    for i, s in enumerate(sys.states):
        v = classify_point(sys, s, 6)
        assert table[i] == (v.m or 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_minimality_and_raw_period_bound(seed):
    rng = random.Random(seed)
    sys, table, labels = random_system(rng)
    m_max = len(sys) + 1
    for s in sys.states:
        d = classify_point(sys, s, m_max)
        r = classify_point(sys, s, m_max, descriptive=False)
        assert d.m == brute_first_return(table, labels, s, m_max)
        assert r.m == brute_first_return(table, labels, s, m_max, raw=True)
        if r.m is not None:
            assert d.m is not None and d.m <= r.m
    for m in range(1, 5):
        assert periodic_set(sys, m, "raw") <= periodic_set(sys, m)


# set map and extension

def test_set_map_examples():
    ident = DescriptiveSystem.on_states(range(4), lambda s: s)
    assert set_map(ident, {1, 3}) == {1, 3}
    const = DescriptiveSystem.on_states(range(4), lambda s: 2)
    assert set_map(const, {0, 1, 3}) == {2}
    sys = logistic()
    a, b = float(sys.states[10]), float(sys.states[200])
    assert set_map(sys, {a, b}) == {sys.f(a), sys.f(b)}
    with pytest.raises(EmptySetError):
        set_map(sys, set())


def test_extension_examples():
    sys = DescriptiveSystem.on_states(range(5), lambda s: (s + 1) % 5)
    fam = CompactFamily.singletons(sys, extra=[[0, 1], [2, 3, 4]])
    assert extension(sys, sys.space, fam) == list(range(len(fam)))
    assert extension(sys, set(), fam) == []
    rng = random.Random(7)
    for _ in range(50):
        fam = random_family(rng, sys)
        A = set(rng.sample(range(5), rng.randint(0, 5)))
        assert extension(sys, A, fam) == [k for k, m in enumerate(fam.members) if m <= A]


def test_family_rejects_empty_members():
    sys = DescriptiveSystem.on_states(range(3), lambda s: s)
    with pytest.raises(EmptySetError):
        CompactFamily(sys, [[0], []])
    with pytest.raises(EmptySetError):
        CompactFamily(sys, [])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_extension_laws(seed):
    rng = random.Random(seed)
    sys, table, _ = random_system(rng)
    states = list(sys.states)
    extra = [rng.sample(states, rng.randint(1, len(states))) for _ in range(16 - len(states))]
    fam = CompactFamily.singletons(sys, extra)
    A = set(rng.sample(states, rng.randint(0, len(states))))
    B = set(rng.sample(states, rng.randint(0, len(states))))
    eA = set(extension(sys, A, fam))
    assert set(extension(sys, A & B, fam)) == eA & set(extension(sys, B, fam))
    assert bool(eA) == bool(A)
    if A:
        img = set_map(sys, A)
        assert all(set_map(sys, fam.members[k]) <= img for k in eA)
        n = rng.randint(0, 5)
        fa = A
        for _ in range(n):
            fa = {table[a] for a in fa}
        assert set_power(sys, A, n) == fa


# chaos witnesses

def test_identity_transitivity_witness_at_one():
    sys = DescriptiveSystem.on_states(range(4), lambda s: s)
    fam = CompactFamily.singletons(sys)
    rep = check_descriptive_transitivity(sys, fam, {0, 1}, {0, 1}, 3)
    assert rep.found and rep.witness["n"] == 1 and rep.witness["K"] == 0


def test_logistic_transitivity_witness():
    sys = logistic()
    fam = CompactFamily.singletons(sys)
    U = sys.cells(0.0, 0.1, closed="left")
    V = sys.cells(0.9, 1.0)
    rep = check_descriptive_transitivity(sys, fam, U, V, 10)
    assert rep.found
    w = rep.witness
    (k,) = w["K_members"]
    assert float(next(iter(set_power(sys, {k}, w["n"])))) >= 0.9
    # no smaller n works for any member of e(U)
    for n in range(1, w["n"]):
        assert all(float(next(iter(set_power(sys, {u}, n)))) < 0.9 for u in U)


def test_constant_map_exhausts():
    states = list(range(6))
    sys = DescriptiveSystem.on_states(states, lambda s: 5)
    fam = CompactFamily.singletons(sys)
    rep = check_descriptive_transitivity(sys, fam, {0, 1, 2}, {0, 1, 2}, 10)
    assert not rep.found and rep.checked["n_max"] == 10
    rep = check_descriptive_sensitivity(sys, fam, set(states), 1e-6, 10)
    assert not rep.found


def test_identity_sensitivity_exhausts():
    sys = DescriptiveSystem.on_states(range(4), lambda s: s)
    fam = CompactFamily.singletons(sys)
    rep = check_descriptive_sensitivity(sys, fam, sys.space, 3.5, 5)
    assert not rep.found
    assert check_descriptive_sensitivity(sys, fam, sys.space, 2.5, 5).found


def test_logistic_sensitivity_witness():
    sys = logistic()
    fam = CompactFamily.singletons(sys)
    rep = check_descriptive_sensitivity(sys, fam, sys.cells(0.1, 0.2), 0.5, 20)
    assert rep.found and rep.witness["distance"] > 0.5
    a, b, n = rep.witness["A_members"], rep.witness["B_members"], rep.witness["n"]
    fa, fb = set_power(sys, a, n), set_power(sys, b, n)
    assert abs(next(iter(fa)) - next(iter(fb))) == rep.witness["distance"]


def test_sensitivity_readings_differ():
    sys = DescriptiveSystem.on_states(range(4), lambda s: s)
    fam = CompactFamily(sys, [[0, 3], [0]])
    assert check_descriptive_sensitivity(sys, fam, sys.space, 2.0, 1).found
    assert not check_descriptive_sensitivity(sys, fam, sys.space, 2.0, 1, reading="infimum").found
    with pytest.raises(ValueError):
        check_descriptive_sensitivity(sys, fam, sys.space, 0.0, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_raw_transitivity_implies_descriptive(seed):
    rng = random.Random(seed)
    sys, _, _ = random_system(rng)
    fam = random_family(rng, sys)
    states = list(sys.states)
    U = set(rng.sample(states, rng.randint(1, len(states))))
    V = set(rng.sample(states, rng.randint(1, len(states))))
    raw = check_descriptive_transitivity(sys, fam, U, V, 6, mode="raw")
    desc = check_descriptive_transitivity(sys, fam, U, V, 6)
    if raw.found:
        assert desc.found and desc.witness["n"] <= raw.witness["n"]


def test_density_identity_and_uncovered():
    sys = DescriptiveSystem.on_states(range(4), lambda s: s)
    fam = CompactFamily.singletons(sys)
    assert check_periodic_density(sys, fam, 1e-9, 3).ok

    shift = DescriptiveSystem.on_states([0, 1, 10], {0: 0, 1: 0, 10: 0})
    fam = CompactFamily(shift, [[0], [10]])
    rep = check_periodic_density(shift, fam, 0.5, 4)
    assert rep.periodic == {0: 1}
    assert rep.uncovered == [1]
    assert rep.coverage[1]["distance"] == 10.0
    with pytest.raises(ValueError):
        check_periodic_density(shift, fam, 0.0, 4)


def test_logistic_density_matches_brute_oracle():
    n = 256
    sys = logistic(n)
    fam = CompactFamily.singletons(sys)
    r = 2.0 / (n - 1)
    rep = check_periodic_density(sys, fam, r, n)
    periodic = [i for i, s in enumerate(sys.states)
                if brute_first_return(dict(enumerate(sys.nxt.tolist())),
                                      sys.states, i, n) is not None]
    for i, s in enumerate(sys.states):
        covered = any(abs(s - sys.states[p]) < r for p in periodic)
        assert rep.coverage[i]["covered"] == covered
    assert sorted(rep.periodic) == periodic


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_raw_periodic_members_are_descriptive(seed):
    rng = random.Random(seed)
    sys, _, _ = random_system(rng)
    fam = random_family(rng, sys)
    raw = periodic_members(sys, fam, 8, "raw")
    desc = periodic_members(sys, fam, 8)
    assert set(raw) <= set(desc)
    assert all(desc[k] <= raw[k] for k in raw)


def test_singleton_fast_path_agrees_with_general_path():
    rng = random.Random(3)
    for _ in range(30):
        sys, _, _ = random_system(rng)
        fam = CompactFamily.singletons(sys)
        mixed = CompactFamily(sys, [[s] for s in sys.states] + [list(sys.states)])
        fast = periodic_members(sys, fam, 6)
        slow = {k: m for k, m in periodic_members(sys, mixed, 6).items() if k < len(sys)}
        assert fast == slow


def test_witness_kernels_see_descriptions():
    sys = DescriptiveSystem.on_grid(-1.0, 1.0, 5, lambda x: -x, abs_suite())
    fam = CompactFamily.singletons(sys)
    assert hausdorff(sys.descriptions[[1]], sys.descriptions[[3]]) == 0.0
    assert check_periodic_density(sys, fam, 1e-6, 1).ok
