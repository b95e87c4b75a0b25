"""Seeded randomized self-checks bundled with the CLI (``descprox selftest``)."""

import math
import random

import numpy as np

from .description import DescribedSet, descriptive_distance, descriptively_near
from .dynamics import CompactFamily, DescriptiveSystem, extension, set_map, set_power
from .hausdorff import descriptive_hausdorff_distance, hausdorff_distance


def _brute_hausdorff(Q, S):
    def d(p, q):
        return math.sqrt(sum((a - b) * (a - b) for a, b in zip(p, q)))

    fwd = max(min(d(q, s) for s in S) for q in Q)
    bwd = max(min(d(q, s) for q in Q) for s in S)
    return max(fwd, bwd)


def _random_points(rng, dim):
    k = rng.randint(1, 8)
    return [tuple(rng.uniform(-5, 5) for _ in range(dim)) for _ in range(k)]


def check_hausdorff(rng, pairs=200):
    bad = 0
    for _ in range(pairs):
        dim = rng.randint(1, 3)
        Q, S = _random_points(rng, dim), _random_points(rng, dim)
        if hausdorff_distance(Q, S) != _brute_hausdorff(Q, S):
            bad += 1
    return bad == 0, f"{pairs} pairs, {bad} mismatches"


def check_metric(rng, trials=100):
    bad = 0
    for _ in range(trials):
        dim = rng.randint(1, 3)
        A, B, C = (DescribedSet.from_vectors(n, _random_points(rng, dim)) for n in "ABC")
        ab = descriptive_hausdorff_distance(A, B)
        ok = (
            ab == descriptive_hausdorff_distance(B, A)
            and descriptive_hausdorff_distance(A, A) == 0
            and descriptive_hausdorff_distance(A, C)
            <= ab + descriptive_hausdorff_distance(B, C) + 1e-12
            and descriptive_distance(A, B) <= ab
            and descriptively_near(A, A)
        )
        bad += not ok
    return bad == 0, f"{trials} triples, {bad} violations"


def check_extension_laws(rng, systems=50):
    bad = 0
    for _ in range(systems):
        n = rng.randint(1, 12)
        states = list(range(n))
        table = {s: rng.randrange(n) for s in states}
        sys = DescriptiveSystem.on_states(states, table)
        members = [rng.sample(states, rng.randint(1, n)) for _ in range(rng.randint(1, 16))]
        fam = CompactFamily(sys, members)
        A = set(rng.sample(states, rng.randint(0, n)))
        B = set(rng.sample(states, rng.randint(0, n)))
        eA, eB = set(extension(sys, A, fam)), set(extension(sys, B, fam))
        ok = set(extension(sys, A & B, fam)) == eA & eB
        if A:
            img = set_map(sys, A)
            ok &= all(set_map(sys, fam.members[k]) <= img for k in eA)
            k = rng.randint(0, 4)
            fk = A
            for _ in range(k):
                fk = {table[a] for a in fk}
            ok &= set_power(sys, A, k) == frozenset(fk)
        else:
            ok &= not eA
        bad += not ok
    return bad == 0, f"{systems} systems, {bad} violations"


def run(seed=0):
    rng = random.Random(seed)
    np.random.seed(seed)
    return [
        ("hausdorff_oracle", *check_hausdorff(rng)),
        ("metric_axioms", *check_metric(rng)),
        ("extension_laws", *check_extension_laws(rng)),
    ]
