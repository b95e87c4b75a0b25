"""Probe functions, feature descriptions and the descriptive distance between sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import EmptySetError, InvalidChain, ProbeFailure, SuiteMismatch

#: default equality slack for real-valued probes
TAU_EQ_REAL = 1e-12
#: default convergence threshold for the indefinite (limit) distance
TAU_CONV = 1e-9


@dataclass(frozen=True)
class Probe:
    """A named real-valued feature extractor."""

    name: str
    func: Callable[[Any], float] = field(compare=False)
    unit: str = ""
    integer_valued: bool = False

    def __call__(self, element) -> float:
        try:
            value = self.func(element)
        except Exception as exc:  # any failure inside a probe means "undefined here"
            raise ProbeFailure(self.name, element, repr(exc)) from exc
        try:
            value = float(value)
        except (TypeError, ValueError) as exc:
            raise ProbeFailure(self.name, element, f"non-numeric value {value!r}") from exc
        if not math.isfinite(value):
            raise ProbeFailure(self.name, element, f"non-finite value {value!r}")
        return value


class ProbeSuite:
    """An ordered, uniquely named collection of probes.

    Two suites are interchangeable when their probe names match in order.
    """

    def __init__(self, probes: Iterable[Probe]):
        self.probes = tuple(probes)
        if not self.probes:
            raise ValueError("a probe suite needs at least one probe")
        names = [p.name for p in self.probes]
        if len(set(names)) != len(names):
            raise ValueError(f"probe names must be unique, got {names}")

    @classmethod
    def lookup(cls, names: Sequence[str], units: Sequence[str] | None = None,
               integer_valued: bool = False) -> "ProbeSuite":
        """Suite whose probes read precomputed values from ``FeaturedElement``s."""
        units = list(units) if units is not None else [""] * len(names)
        return cls(
            Probe(name, _feature_reader(name), unit, integer_valued)
            for name, unit in zip(names, units)
        )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.probes)

    @property
    def units(self) -> tuple[str, ...]:
        return tuple(p.unit for p in self.probes)

    @property
    def n(self) -> int:
        return len(self.probes)

    @property
    def integer_valued(self) -> bool:
        return all(p.integer_valued for p in self.probes)

    def default_tolerance(self) -> float:
        return 0.0 if self.integer_valued else TAU_EQ_REAL

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def feature_vector(self, element) -> tuple[float, ...]:
        return tuple(p(element) for p in self.probes)

    def __eq__(self, other):
        return isinstance(other, ProbeSuite) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"ProbeSuite({list(self.names)})"


def _feature_reader(name):
    def read(element):
        return element.features[name]

    return read


@dataclass(frozen=True)
class FeaturedElement:
    """An opaque element handle carrying a precomputed feature table."""

    handle: str
    features: Mapping[str, float] = field(compare=False, hash=False)


def _canonical(vectors: np.ndarray, tol: float) -> np.ndarray:
    if len(vectors) == 0:
        return vectors
    uniq = np.unique(vectors, axis=0)
    if tol <= 0 or len(uniq) == 1:
        return uniq
    kept = [uniq[0]]
    for v in uniq[1:]:
        if all(np.max(np.abs(v - k)) > tol for k in kept):
            kept.append(v)
    return np.array(kept)


class Description:
    """A finite set of feature vectors in R^n.

    Vectors are stored in lexicographic order with duplicates collapsed, so
    two descriptions of the same set compare equal regardless of how they were
    built.
    """

    def __init__(self, vectors, dim: int | None = None, tol: float = 0.0):
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.size == 0:
            if dim is None:
                raise EmptySetError("cannot infer dimension of an empty description")
            arr = arr.reshape(0, dim)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(-1, dim)
        if dim is not None and arr.shape[1] != dim:
            raise ValueError(f"vectors have dimension {arr.shape[1]}, expected {dim}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("description vectors must be finite")
        arr = _canonical(arr, tol)
        arr.setflags(write=False)
        self.vectors = arr

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return (tuple(v) for v in self.vectors)

    def as_set(self) -> frozenset[tuple[float, ...]]:
        return frozenset(self)

    def restrict(self, indices: Sequence[int]) -> "Description":
        return Description(self.vectors[:, list(indices)], dim=len(indices))

    def equals(self, other: "Description", tol: float = 0.0) -> bool:
        """Set equality up to ``tol`` in the max norm on each coordinate."""
        if self.dim != other.dim:
            return False
        if tol <= 0:
            return self.vectors.shape == other.vectors.shape and bool(
                np.array_equal(self.vectors, other.vectors)
            )
        return kernels.hausdorff(self.vectors, other.vectors, "max") <= tol

    def intersects(self, other: "Description", tol: float = 0.0) -> bool:
        if self.dim != other.dim:
            return False
        return kernels.min_pair_distance(self.vectors, other.vectors, "max") <= tol

    def __eq__(self, other):
        if not isinstance(other, Description):
            return NotImplemented
        return self.equals(other)

    def __hash__(self):
        return hash(self.vectors.tobytes())

    def __repr__(self):
        return f"Description({[tuple(v) for v in self.vectors]})"


def describe(elements: Iterable, suite: ProbeSuite, tol: float | None = None) -> Description:
    """Complete description of ``elements``: the set of their feature tuples."""
    elements = list(elements)
    if not elements:
        raise EmptySetError("cannot describe an empty set")
    if tol is None:
        tol = suite.default_tolerance()
    rows = [suite.feature_vector(e) for e in elements]
    return Description(rows, dim=suite.n, tol=tol)


class DescribedSet:
    """A named finite set of elements together with its probe suite."""

    def __init__(self, id: str, elements: Iterable, suite: ProbeSuite):
        self.id = str(id)
        self.elements = tuple(dict.fromkeys(elements))
        self.suite = suite
        if not self.elements:
            raise EmptySetError(f"described set {self.id!r} has no elements")

    @classmethod
    def from_features(cls, id: str, rows: Mapping[str, Mapping[str, float]],
                      suite: ProbeSuite) -> "DescribedSet":
        return cls(id, [FeaturedElement(h, dict(f)) for h, f in rows.items()], suite)

    @classmethod
    def from_vectors(cls, id: str, vectors, names: Sequence[str] | None = None) -> "DescribedSet":
        """Convenience: one element per feature vector."""
        arr = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        names = list(names) if names is not None else [f"phi{k + 1}" for k in range(arr.shape[1])]
        suite = ProbeSuite.lookup(names)
        rows = {f"{id}#{i}": dict(zip(names, map(float, v))) for i, v in enumerate(arr)}
        return cls.from_features(id, rows, suite)

    @cached_property
    def description(self) -> Description:
        return describe(self.elements, self.suite)

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        """Per-element feature vectors, one row per element (no collapse)."""
        arr = np.array([self.suite.feature_vector(e) for e in self.elements], dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def __repr__(self):
        return f"DescribedSet({self.id!r}, |A|={len(self.elements)}, |Phi(A)|={len(self.description)})"


def check_suites(A: DescribedSet, B: DescribedSet) -> None:
    if A.suite.names != B.suite.names:
        raise SuiteMismatch(
            f"{A.id!r} uses probes {list(A.suite.names)}, {B.id!r} uses {list(B.suite.names)}"
        )


def descriptive_distance(A: DescribedSet, B: DescribedSet, norm: str = "euclidean",
                         probes: Sequence[int] | None = None) -> float:
    """Infimum over element pairs of the distance between their feature vectors.

    ``probes`` restricts the comparison to a subset of probe indices.
    """
    check_suites(A, B)
    # duplicates do not change an infimum; use raw rows so no tolerance merging applies
    X, Y = A.feature_matrix, B.feature_matrix
    if probes is not None:
        idx = list(probes)
        X, Y = X[:, idx], Y[:, idx]
    return kernels.min_pair_distance(X, Y, norm)


def descriptively_near(A: DescribedSet, B: DescribedSet, tol: float | None = None,
                       norm: str = "euclidean") -> bool:
    if tol is None:
        tol = A.suite.default_tolerance()
    return descriptive_distance(A, B, norm) <= tol


def cardinality_gap(A: DescribedSet, B: DescribedSet) -> int:
    """| |Phi(A)| - |Phi(B)| |, the size-difference reading of description difference."""
    check_suites(A, B)
    return abs(len(A.description) - len(B.description))


@dataclass(frozen=True)
class FeatureChain:
    """Strictly nested probe-index subsets S_1 < S_2 < ... < S_K (0-based)."""

    subsets: tuple[frozenset[int], ...]

    def __post_init__(self):
        subsets = tuple(frozenset(int(i) for i in s) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        if not subsets:
            raise InvalidChain("a feature chain needs at least one subset")
        if not subsets[0]:
            raise InvalidChain("the first subset of a feature chain must be nonempty")
        for k, (a, b) in enumerate(zip(subsets, subsets[1:]), start=1):
            if not a < b:
                raise InvalidChain(f"subset {k} is not strictly contained in subset {k + 1}")
        if min(subsets[0]) < 0:
            raise InvalidChain("probe indices must be nonnegative")

    @classmethod
    def from_names(cls, suite: ProbeSuite, subsets: Iterable[Iterable[str]]) -> "FeatureChain":
        try:
            return cls(tuple(frozenset(suite.index(n) for n in s) for s in subsets))
        except KeyError as exc:
            raise InvalidChain(f"unknown probe {exc.args[0]!r}") from None

    @classmethod
    def growing(cls, n: int) -> "FeatureChain":
        """{0} < {0,1} < ... < {0..n-1}."""
        return cls(tuple(frozenset(range(k)) for k in range(1, n + 1)))

    def validate_for(self, suite: ProbeSuite) -> None:
        if max(self.subsets[-1]) >= suite.n:
            raise InvalidChain(
                f"chain uses probe index {max(self.subsets[-1])} but suite has {suite.n} probes"
            )

    def __len__(self):
        return len(self.subsets)


@dataclass(frozen=True)
class ConvergenceReport:
    distances: tuple[float, ...]
    tau_conv: float
    tail: int
    final_below: bool
    tail_nonincreasing: bool

    @property
    def verdict(self) -> bool:
        """True when the indefinite descriptive distance is judged to be 0."""
        return self.final_below and self.tail_nonincreasing

    def to_dict(self):
        return {
            "distances": list(self.distances),
            "tau_conv": self.tau_conv,
            "tail": self.tail,
            "final_below": self.final_below,
            "tail_nonincreasing": self.tail_nonincreasing,
            "verdict": self.verdict,
        }


def indefinite_descriptive_distance(A: DescribedSet, B: DescribedSet, chain: FeatureChain,
                                    tau_conv: float = TAU_CONV,
                                    norm: str = "euclidean") -> ConvergenceReport:
    """Evaluate the descriptive distance along a growing chain of probe subsets.

    The limit is judged to be 0 when the last ``max(2, ceil(K/4))`` distances
    never increase and the final distance is below ``tau_conv``.
    """
    if not tau_conv > 0:
        raise ValueError("tau_conv must be positive")
    check_suites(A, B)
    chain.validate_for(A.suite)
    dists = tuple(
        descriptive_distance(A, B, norm, probes=sorted(s)) for s in chain.subsets
    )
    K = len(dists)
    tail = min(K, max(2, math.ceil(K / 4)))
    window = dists[K - tail:]
    nonincreasing = all(b <= a for a, b in zip(window, window[1:]))
    return ConvergenceReport(dists, tau_conv, tail, dists[-1] < tau_conv, nonincreasing)
