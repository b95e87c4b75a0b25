"""Hausdorff distances between finite point sets and between descriptions.

Finite sets stand in for compact ones, so every sup/inf is an exact max/min.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .description import DescribedSet, Description, check_suites
from .errors import DimensionMismatch, EmptySetError, SuiteMismatch, UnknownId


def _as_points(P) -> np.ndarray:
    if isinstance(P, Description):
        return P.vectors
    if isinstance(P, DescribedSet):
        return P.feature_matrix
    arr = np.asarray(P, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or len(arr) == 0:
        raise EmptySetError("a point set must be a nonempty (k, m) array")
    return arr


def hausdorff_distance(Q, S, norm: str = "euclidean") -> float:
    """max of the two directed sup-min distances between finite point sets."""
    Q, S = _as_points(Q), _as_points(S)
    if Q.shape[1] != S.shape[1]:
        raise DimensionMismatch(f"point dimensions differ: {Q.shape[1]} vs {S.shape[1]}")
    return kernels.hausdorff(Q, S, norm)


def descriptive_hausdorff_distance(A: DescribedSet, B: DescribedSet,
                                   norm: str = "euclidean") -> float:
    check_suites(A, B)
    return kernels.hausdorff(A.feature_matrix, B.feature_matrix, norm)


class DescribedCollection:
    """A finite family of described sets sharing one probe suite.

    Every finite description is compact, so each member belongs to K_Phi.
    """

    def __init__(self, members: Iterable[DescribedSet]):
        self.members = tuple(members)
        if not self.members:
            raise EmptySetError("a collection needs at least one member")
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError(f"member ids must be unique, got {ids}")
        names = self.members[0].suite.names
        for m in self.members[1:]:
            if m.suite.names != names:
                raise SuiteMismatch(f"member {m.id!r} does not share the collection's probes")
        self._index = {m.id: i for i, m in enumerate(self.members)}

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, id: str) -> DescribedSet:
        try:
            return self.members[self._index[id]]
        except KeyError:
            raise UnknownId(f"no member with id {id!r}") from None

    def __contains__(self, id):
        return id in self._index


def distance_matrix(collection: DescribedCollection, norm: str = "euclidean",
                    workers: int = 1) -> np.ndarray:
    """Pairwise descriptive Hausdorff distances; rows may be split across threads."""
    members = collection.members
    n = len(members)
    out = np.zeros((n, n))

    def row(i):
        return i, [kernels.hausdorff(members[i].feature_matrix, members[j].feature_matrix, norm)
                   for j in range(i + 1, n)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]
    for i, vals in rows:
        out[i, i + 1:] = vals
        out[i + 1:, i] = vals
    return out


def matrix_to_csv(ids: Sequence[str], matrix: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["", *ids])
    for name, vals in zip(ids, matrix):
        writer.writerow([name, *(f"{v:.6g}" for v in vals)])
    return buf.getvalue()


@dataclass(frozen=True)
class BallCover:
    center: str
    radius: float
    members: frozenset[str]

    def to_dict(self):
        return {"center": self.center, "radius": self.radius, "members": sorted(self.members)}


def ball(collection: DescribedCollection, center_id: str, eps: float,
         norm: str = "euclidean") -> BallCover:
    """Open ball {B : d_H^Phi(center, B) < eps}."""
    if not eps > 0:
        raise ValueError("ball radius must be positive")
    center = collection[center_id]
    inside = frozenset(
        m.id for m in collection
        if descriptive_hausdorff_distance(center, m, norm) < eps
    )
    return BallCover(center_id, float(eps), inside)


def generated_family(universe: frozenset[str], sets: Iterable[frozenset[str]]) -> set[frozenset[str]]:
    """Smallest family containing the empty set, ``universe`` and ``sets`` that is
    closed under union and intersection."""
    family = {frozenset(), frozenset(universe)} | {frozenset(s) for s in sets}
    frontier = set(family)
    while frontier:
        new = set()
        for a in frontier:
            for b in family | new:
                for c in (a | b, a & b):
                    if c not in family and c not in new:
                        new.add(c)
        family |= new
        frontier = new
    return family


@dataclass
class AxiomReport:
    passed: dict[str, bool]
    counterexamples: dict[str, list] = field(default_factory=dict)
    family: list[list[str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self):
        return {
            "ok": self.ok,
            "axioms": {
                name: {"pass": ok, "counterexamples": self.counterexamples.get(name, [])}
                for name, ok in self.passed.items()
            },
            "family": self.family,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _ids(s):
    return sorted(s)


def check_open_family(universe: Iterable[str], family: Iterable[Iterable[str]]) -> AxiomReport:
    """Check the three open-set axioms on a finite family of id-sets.

    Over a finite family, closure under pairwise union gives closure under
    every union, so pairwise checks are complete.
    """
    universe = frozenset(universe)
    fam = {frozenset(s) for s in family}
    ce: dict[str, list] = {"whole_and_empty": [], "union": [], "intersection": []}
    if universe not in fam:
        ce["whole_and_empty"].append(_ids(universe))
    if frozenset() not in fam:
        ce["whole_and_empty"].append([])
    ordered = sorted(fam, key=lambda s: (len(s), _ids(s)))
    for a, b in combinations(ordered, 2):
        if a | b not in fam:
            ce["union"].append([_ids(a), _ids(b)])
        if a & b not in fam:
            ce["intersection"].append([_ids(a), _ids(b)])
    return AxiomReport(
        passed={k: not v for k, v in ce.items()},
        counterexamples={k: v for k, v in ce.items() if v},
        family=[_ids(s) for s in ordered],
    )


def verify_topology_axioms(collection: DescribedCollection, balls: Sequence[BallCover],
                           norm: str = "euclidean") -> AxiomReport:
    """Witness the descriptive Hausdorff topology on the family generated by ``balls``.

    Besides the open-set axioms, each ball is re-checked against its stored
    radius; inconsistent balls are reported under ``ball_consistency``.
    """
    bad = []
    for b in balls:
        if b.center not in collection or not b.members <= set(collection.ids):
            bad.append(b.center)
            continue
        expected = ball(collection, b.center, b.radius, norm).members
        if expected != b.members or b.center not in b.members:
            bad.append(b.center)
    universe = frozenset(collection.ids)
    report = check_open_family(universe, generated_family(universe, (b.members for b in balls)))
    report.passed = {"ball_consistency": not bad, **report.passed}
    if bad:
        report.counterexamples["ball_consistency"] = bad
    return report
