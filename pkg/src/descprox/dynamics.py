"""Descriptive dynamical systems (X, f, Phi) on finite state spaces.

A system is held as an index transition table ``nxt`` (state i maps to
state ``nxt[i]``) plus a matrix of per-state descriptions. Interval maps are
discretized onto ``cells`` evenly spaced nodes with outputs snapped to the
nearest node, so orbits are finite-state and periodicity is decidable.

State-sets passed to and returned from this module are frozensets of state
values; ``CompactFamily`` members are addressed by their index in the family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .description import Description, Probe, ProbeSuite
from .errors import EmptySetError, StateOutOfSpace

#: default description-equality slack for real probes on orbits
TAU_EQ = 1e-9


def identity_suite(name: str = "x", unit: str = "") -> ProbeSuite:
    return ProbeSuite([Probe(name, float, unit)])


class DescriptiveSystem:
    def __init__(self, states: Sequence[Hashable], nxt, suite: ProbeSuite,
                 tau_eq: float = TAU_EQ, grid: tuple[float, float] | None = None):
        self.states = tuple(states)
        self.nxt = np.asarray(nxt, dtype=np.int64)
        self.nxt.setflags(write=False)
        self.suite = suite
        self.tau_eq = float(tau_eq)
        self.grid = grid
        n = len(self.states)
        if self.nxt.shape != (n,):
            raise ValueError("transition table must have one entry per state")
        if n and (self.nxt.min() < 0 or self.nxt.max() >= n):
            raise StateOutOfSpace("transition table leaves the state space")
        if grid is None:
            self._index = {s: i for i, s in enumerate(self.states)}
            if len(self._index) != n:
                raise ValueError("states must be distinct")

    @classmethod
    def on_grid(cls, lo: float, hi: float, cells: int, f: Callable[[float], float],
                suite: ProbeSuite | None = None, tau_eq: float = TAU_EQ) -> "DescriptiveSystem":
        """Discretize ``f`` on ``cells`` evenly spaced nodes spanning [lo, hi].

        Outputs outside [lo, hi] are clamped to the end nodes.
        """
        if cells < 2:
            raise ValueError("a grid needs at least 2 cells")
        if not hi > lo:
            raise ValueError("grid needs lo < hi")
        nodes = np.linspace(lo, hi, cells)
        images = np.array([f(float(x)) for x in nodes], dtype=np.float64)
        nxt = _snap(images, lo, hi, cells)
        return cls([float(x) for x in nodes], nxt, suite or identity_suite(), tau_eq, (lo, hi))

    @classmethod
    def on_states(cls, states: Sequence[Hashable], f: Callable | Mapping,
                  suite: ProbeSuite | None = None, tau_eq: float = TAU_EQ) -> "DescriptiveSystem":
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        fn = f.__getitem__ if isinstance(f, Mapping) else f
        nxt = []
        for s in states:
            try:
                nxt.append(index[fn(s)])
            except KeyError:
                raise StateOutOfSpace(f"f({s!r}) is not a state") from None
        return cls(states, nxt, suite or identity_suite(), tau_eq)

    def __len__(self):
        return len(self.states)

    @cached_property
    def descriptions(self) -> np.ndarray:
        arr = np.array([self.suite.feature_vector(s) for s in self.states], dtype=np.float64)
        arr = arr.reshape(len(self.states), self.suite.n)
        arr.setflags(write=False)
        return arr

    def index_of(self, x) -> int:
        if self.grid is not None:
            lo, hi = self.grid
            try:
                xv = float(x)
            except (TypeError, ValueError):
                raise StateOutOfSpace(f"{x!r} is not a grid point") from None
            if not lo <= xv <= hi:
                raise StateOutOfSpace(f"{x!r} lies outside [{lo}, {hi}]")
            return int(_snap(np.array([xv]), lo, hi, len(self.states))[0])
        try:
            return self._index[x]
        except (KeyError, TypeError):
            raise StateOutOfSpace(f"{x!r} is not a state") from None

    def indices(self, A: Iterable) -> np.ndarray:
        return np.unique(np.array([self.index_of(a) for a in A], dtype=np.int64))

    def state_set(self, idx) -> frozenset:
        return frozenset(self.states[int(i)] for i in idx)

    def cells(self, lo: float, hi: float, closed: str = "both") -> frozenset:
        """States whose value lies in the interval; ``closed`` is both|left|right|neither."""
        out = []
        for s in self.states:
            v = float(s)
            left = v >= lo if closed in ("both", "left") else v > lo
            right = v <= hi if closed in ("both", "right") else v < hi
            if left and right:
                out.append(s)
        return frozenset(out)

    @property
    def space(self) -> frozenset:
        return frozenset(self.states)

    def f(self, x):
        return self.states[int(self.nxt[self.index_of(x)])]

    def power_table(self, m: int) -> np.ndarray:
        """Index table of f^m."""
        table = np.arange(len(self.states))
        for _ in range(m):
            table = self.nxt[table]
        return table

    def describe_indices(self, idx) -> Description:
        return Description(self.descriptions[np.asarray(idx, dtype=np.int64)], dim=self.suite.n)

    def describe(self, A: Iterable) -> Description:
        return self.describe_indices(self.indices(A))


def _snap(values, lo, hi, cells):
    pos = np.rint((np.asarray(values) - lo) / (hi - lo) * (cells - 1))
    return np.clip(pos, 0, cells - 1).astype(np.int64)


def _same(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.abs(a - b) <= tol))


@dataclass(frozen=True)
class Orbit:
    seed: Hashable
    states: tuple
    descriptions: tuple[tuple[float, ...], ...]

    def to_dict(self):
        return {"seed": self.seed, "states": list(self.states),
                "descriptions": [list(d) for d in self.descriptions]}


def orbit(sys: DescriptiveSystem, x, n: int) -> Orbit:
    """[x, f(x), ..., f^n(x)] with the parallel description sequence."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    i = sys.index_of(x)
    idx = [i]
    for _ in range(n):
        idx.append(int(sys.nxt[idx[-1]]))
    return Orbit(
        sys.states[i],
        tuple(sys.states[k] for k in idx),
        tuple(tuple(float(v) for v in sys.descriptions[k]) for k in idx),
    )


@dataclass(frozen=True)
class PeriodicityVerdict:
    subject: Hashable
    kind: str  # "fixed" | "period-m" | "none"
    m: int | None
    descriptive: bool

    def to_dict(self):
        return {"subject": self.subject, "kind": self.kind, "m": self.m,
                "descriptive": self.descriptive}


def _verdict(subject, m, descriptive):
    if m == 0:
        return PeriodicityVerdict(subject, "none", None, descriptive)
    return PeriodicityVerdict(subject, "fixed" if m == 1 else "period-m", m, descriptive)


def classify_point(sys: DescriptiveSystem, a, m_max: int, descriptive: bool = True,
                   tau_eq: float | None = None) -> PeriodicityVerdict:
    """Smallest m <= m_max with Phi(f^m(a)) = Phi(a) (or f^m(a) = a when not descriptive)."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    tol = sys.tau_eq if tau_eq is None else tau_eq
    i = sys.index_of(a)
    cur = i
    for m in range(1, m_max + 1):
        cur = int(sys.nxt[cur])
        if cur == i if not descriptive else _same(sys.descriptions[cur], sys.descriptions[i], tol):
            return _verdict(sys.states[i], m, descriptive)
    return _verdict(sys.states[i], 0, descriptive)


def first_return_table(sys: DescriptiveSystem, m_max: int, descriptive: bool = True,
                       tau_eq: float | None = None) -> np.ndarray:
    """Per-state minimal period (0 when none within m_max), computed in the kernel."""
    tol = sys.tau_eq if tau_eq is None else tau_eq
    if descriptive:
        return kernels.first_return(sys.nxt, sys.descriptions, m_max, tol)
    ids = np.arange(len(sys), dtype=np.float64).reshape(-1, 1)
    return kernels.first_return(sys.nxt, ids, m_max, 0.0)


def periodic_set(sys: DescriptiveSystem, m: int, mode: str = "descriptive",
                 tau_eq: float | None = None) -> frozenset:
    """Per_m: states with f^m(a) = a (raw) or Phi(f^m(a)) = Phi(a) (descriptive)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    table = sys.power_table(m)
    if mode == "raw":
        hit = table == np.arange(len(sys))
    elif mode == "descriptive":
        tol = sys.tau_eq if tau_eq is None else tau_eq
        hit = np.all(np.abs(sys.descriptions[table] - sys.descriptions) <= tol, axis=1)
    else:
        raise ValueError(f"mode must be 'raw' or 'descriptive', got {mode!r}")
    return sys.state_set(np.flatnonzero(hit))


def set_map(sys: DescriptiveSystem, A: Iterable) -> frozenset:
    """f-bar(A) = {f(a) : a in A}."""
    idx = sys.indices(A)
    if len(idx) == 0:
        raise EmptySetError("set_map needs a nonempty set")
    return sys.state_set(np.unique(sys.nxt[idx]))


def set_power(sys: DescriptiveSystem, A: Iterable, n: int) -> frozenset:
    idx = sys.indices(A)
    if len(idx) == 0:
        raise EmptySetError("set_power needs a nonempty set")
    for _ in range(n):
        idx = np.unique(sys.nxt[idx])
    return sys.state_set(idx)


class CompactFamily:
    """A finite sample of the hyperspace K(X): nonempty state-subsets."""

    def __init__(self, sys: DescriptiveSystem, members: Iterable[Iterable]):
        self.sys = sys
        idx = []
        for m in members:
            ix = sys.indices(m)
            if len(ix) == 0:
                raise EmptySetError("family members must be nonempty")
            idx.append(ix)
        if not idx:
            raise EmptySetError("a compact family needs at least one member")
        self._idx = tuple(idx)
        self.members = tuple(sys.state_set(ix) for ix in idx)

    @classmethod
    def singletons(cls, sys: DescriptiveSystem, extra: Iterable[Iterable] = ()) -> "CompactFamily":
        return cls(sys, [[s] for s in sys.states] + [list(e) for e in extra])

    def __len__(self):
        return len(self.members)

    def member_indices(self, k: int) -> np.ndarray:
        return self._idx[k]

    @cached_property
    def descriptions(self) -> tuple[Description, ...]:
        return tuple(self.sys.describe_indices(ix) for ix in self._idx)

    @cached_property
    def index_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(ix.tolist()) for ix in self._idx)

    @cached_property
    def all_singletons(self) -> bool:
        return all(len(ix) == 1 for ix in self._idx)


def extension(sys: DescriptiveSystem, A: Iterable, family: CompactFamily) -> list[int]:
    """e(A): indices of family members contained in A."""
    a = frozenset(sys.indices(A).tolist()) if A else frozenset()
    return [k for k, ix in enumerate(family.index_sets) if ix <= a]


@dataclass
class WitnessReport:
    kind: str
    found: bool
    witness: dict | None
    checked: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "found": self.found, "witness": self.witness,
                "checked": self.checked}


def _orbit_of_sets(sys, family, members, n_max):
    """Yield (n, {k: image indices}) for n = 1..n_max."""
    cur = {k: family.member_indices(k) for k in members}
    for n in range(1, n_max + 1):
        cur = {k: np.unique(sys.nxt[ix]) for k, ix in cur.items()}
        yield n, cur


def check_descriptive_transitivity(sys: DescriptiveSystem, family: CompactFamily, U, V,
                                   n_max: int, mode: str = "descriptive",
                                   tau_eq: float | None = None) -> WitnessReport:
    """Search n = 1..n_max for K in e(U), K' in e(V) with Phi(f-bar^n(K)) = Phi(K').

    ``mode="raw"`` requires f-bar^n(K) = K' as sets instead. The reported
    witness is the lexicographically smallest (n, K index, K' index).
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    tol = sys.tau_eq if tau_eq is None else tau_eq
    eU, eV = extension(sys, U, family), extension(sys, V, family)
    checked = {"n_max": n_max, "e_U": len(eU), "e_V": len(eV), "mode": mode}
    if not eU or not eV:
        return WitnessReport("transitivity", False, None, checked)
    targets = {j: family.descriptions[j] for j in eV}
    raw_targets = {j: family.member_indices(j).tobytes() for j in eV}
    for n, images in _orbit_of_sets(sys, family, eU, n_max):
        for k in eU:
            img = images[k]
            if mode == "raw":
                key = img.tobytes()
                hits = [j for j in eV if raw_targets[j] == key]
            else:
                d = sys.describe_indices(img)
                hits = [j for j in eV if d.equals(targets[j], tol)]
            if hits:
                j = hits[0]
                witness = {"n": n, "K": k, "K_members": sorted(family.members[k], key=_order),
                           "target": j, "target_members": sorted(family.members[j], key=_order)}
                return WitnessReport("transitivity", True, witness, checked)
    return WitnessReport("transitivity", False, None, checked)


def check_descriptive_sensitivity(sys: DescriptiveSystem, family: CompactFamily, U, delta: float,
                                  n_max: int, reading: str = "hausdorff",
                                  norm: str = "euclidean") -> WitnessReport:
    """Search A, B in e(U) and n <= n_max whose n-th image descriptions are more
    than ``delta`` apart. ``reading="infimum"`` uses the descriptive (inf)
    distance instead of the Hausdorff distance between descriptions."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if reading not in ("hausdorff", "infimum"):
        raise ValueError(f"reading must be 'hausdorff' or 'infimum', got {reading!r}")
    dist = kernels.hausdorff if reading == "hausdorff" else kernels.min_pair_distance
    eU = extension(sys, U, family)
    checked = {"n_max": n_max, "e_U": len(eU), "delta": delta, "reading": reading}
    if len(eU) < 2:
        return WitnessReport("sensitivity", False, None, checked)
    for n, images in _orbit_of_sets(sys, family, eU, n_max):
        descs = {k: sys.descriptions[images[k]] for k in eU}
        for a_pos, a in enumerate(eU):
            for b in eU[a_pos + 1:]:
                d = dist(descs[a], descs[b], norm)
                if d > delta:
                    witness = {"n": n, "A": a, "B": b, "distance": d,
                               "A_members": sorted(family.members[a], key=_order),
                               "B_members": sorted(family.members[b], key=_order)}
                    return WitnessReport("sensitivity", True, witness, checked)
    return WitnessReport("sensitivity", False, None, checked)


def periodic_members(sys: DescriptiveSystem, family: CompactFamily, m_max: int,
                     mode: str = "descriptive", tau_eq: float | None = None) -> dict[int, int]:
    """Map member index -> smallest m <= m_max with Phi(f-bar^m(K)) = Phi(K)
    (descriptive) or f-bar^m(K) = K (raw)."""
    tol = sys.tau_eq if tau_eq is None else tau_eq
    if family.all_singletons:
        table = first_return_table(sys, m_max, mode == "descriptive", tol)
        return {k: int(table[family.member_indices(k)[0]])
                for k in range(len(family)) if table[family.member_indices(k)[0]]}
    out = {}
    for k in range(len(family)):
        start = family.member_indices(k)
        d0 = family.descriptions[k]
        ix = start
        for m in range(1, m_max + 1):
            ix = np.unique(sys.nxt[ix])
            if mode == "raw":
                hit = np.array_equal(ix, start)
            else:
                hit = sys.describe_indices(ix).equals(d0, tol)
            if hit:
                out[k] = m
                break
    return out


@dataclass
class DensityReport:
    radius: float
    periodic: dict[int, int]
    coverage: list[dict]

    @property
    def uncovered(self) -> list[int]:
        return [c["member"] for c in self.coverage if not c["covered"]]

    @property
    def ok(self) -> bool:
        return not self.uncovered

    def to_dict(self):
        return {"radius": self.radius, "ok": self.ok,
                "periodic": {str(k): m for k, m in self.periodic.items()},
                "uncovered": self.uncovered, "coverage": self.coverage}


def check_periodic_density(sys: DescriptiveSystem, family: CompactFamily, r: float, m_max: int,
                           norm: str = "euclidean", tau_eq: float | None = None) -> DensityReport:
    """For each member K, is some descriptively periodic member within
    descriptive Hausdorff distance < r?"""
    if not r > 0:
        raise ValueError("r must be positive")
    periodic = periodic_members(sys, family, m_max, "descriptive", tau_eq)
    pvecs = [(p, family.descriptions[p].vectors) for p in sorted(periodic)]
    coverage = []
    for k in range(len(family)):
        vk = family.descriptions[k].vectors
        best, best_d = None, float("inf")
        for p, vp in pvecs:
            d = kernels.hausdorff(vk, vp, norm)
            if d < best_d:
                best, best_d = p, d
                if d == 0.0:
                    break
        coverage.append({"member": k, "covered": best_d < r, "nearest_periodic": best,
                         "distance": best_d if best is not None else None})
    return DensityReport(float(r), periodic, coverage)


def _order(s):
    return (isinstance(s, str), s)
