"""Hilbert envelopes, signed lobe segmentation, lobe energy and energy dissipation.

Integration uses the trapezoid rule on a refined grid: the sample times plus
every zero crossing of the linearly interpolated waveform (where m = 0). Lobe
supports run crossing to crossing, so lobe integrals partition the frame
integral exactly up to rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import hilbert

from . import kernels
from .errors import (BadWindow, FrameMismatch, LobeIdMismatch, NoCrossingsWarning,
                     SupportOutOfFrame, TooFewSamples, ValidationError)

MIN_SAMPLES = 8
UNIFORM_RTOL = 1e-9
POS, NEG = "+ve", "-ve"


class Waveform:
    """Uniformly sampled signal m(t) belonging to one frame."""

    def __init__(self, t, m, frame_id: str = "0"):
        t = np.asarray(t, dtype=np.float64)
        m = np.asarray(m, dtype=np.float64)
        if t.ndim != 1 or t.shape != m.shape:
            raise ValidationError(["t and m must be 1-d arrays of equal length"])
        if len(t) < MIN_SAMPLES:
            raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {len(t)}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(m))):
            raise ValidationError(["samples must be finite"])
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValidationError(["sample times must be strictly increasing"])
        step = (t[-1] - t[0]) / (len(t) - 1)
        if np.max(np.abs(dt - step)) > UNIFORM_RTOL * step:
            raise ValidationError([f"sample spacing is not uniform (dt={step:g})"])
        t.setflags(write=False)
        m.setflags(write=False)
        self.t, self.m, self.frame_id = t, m, str(frame_id)
        self.dt = step

    @classmethod
    def sampled(cls, func, duration: float, rate: float, frame_id: str = "0",
                t0: float = 0.0, endpoint: bool = False) -> "Waveform":
        n = int(round(duration * rate)) + (1 if endpoint else 0)
        t = t0 + np.arange(n) / rate
        return cls(t, func(t), frame_id)

    def __len__(self):
        return len(self.t)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @cached_property
    def crossing_positions(self) -> np.ndarray:
        """Zero crossings as fractional sample indices."""
        return kernels.zero_crossings(self.m)

    @cached_property
    def crossing_times(self) -> np.ndarray:
        return np.interp(self.crossing_positions, np.arange(len(self.t)), self.t)


@dataclass(frozen=True)
class Envelope:
    values: np.ndarray
    mode: str
    tau_env: float

    def __len__(self):
        return len(self.values)


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def hilbert_envelope(w: Waveform, mode: str = "analytic", tau_env: float | None = None) -> Envelope:
    """Envelope of ``w``.

    ``analytic``: magnitude of the analytic signal, with the quadrature part
    from an FFT Hilbert transform of the whole frame zero-padded to the next
    power of two. The first and last few cycles carry edge error.
    ``literal``: sqrt(m^2 + (-m)^2) per sample, i.e. sqrt(2)|m|.
    """
    if len(w) < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples")
    m = w.m
    if tau_env is None:
        tau_env = 1e-6 * float(np.max(np.abs(m))) if len(m) else 0.0
    if mode == "literal":
        values = np.sqrt(m * m + (-m) * (-m))
    elif mode == "analytic":
        values = np.abs(hilbert(m, _next_pow2(len(m)))[: len(m)])
    else:
        raise ValueError(f"mode must be 'analytic' or 'literal', got {mode!r}")
    values.setflags(write=False)
    return Envelope(values, mode, float(tau_env))


@dataclass(frozen=True)
class _Refined:
    t: np.ndarray
    m: np.ndarray
    env: np.ndarray
    crossings: np.ndarray  # node indices of zero crossings, ascending


def _refine(w: Waveform, env: Envelope | None) -> _Refined:
    pos = w.crossing_positions
    e = env.values if env is not None else np.zeros_like(w.m)
    new = pos[pos != np.floor(pos)]  # integer positions are existing zero samples
    tc = np.interp(new, np.arange(len(w.t)), w.t)
    ec = np.interp(new, np.arange(len(w.t)), e)
    t = np.concatenate([w.t, tc])
    order = np.argsort(t, kind="stable")
    t = t[order]
    m = np.concatenate([w.m, np.zeros(len(tc))])[order]
    ev = np.concatenate([e, ec])[order]
    ctimes = w.crossing_times
    cross = np.searchsorted(t, ctimes, side="left")
    return _Refined(t, m, ev, cross)


def _integrand(ref: _Refined, kind: str) -> np.ndarray:
    if kind == "squared":
        return ref.m * ref.m
    if kind == "envelope":
        return ref.env
    if kind == "abs":
        return np.abs(ref.m)
    raise ValueError(f"integrand must be 'envelope', 'squared' or 'abs', got {kind!r}")


def _window(ref: _Refined, a: float, b: float, kind: str) -> float:
    inside = (ref.t > a) & (ref.t < b)
    ma, mb = np.interp([a, b], ref.t, ref.m)
    ea, eb = np.interp([a, b], ref.t, ref.env)
    t = np.concatenate([[a], ref.t[inside], [b]])
    if kind == "squared":
        y = np.concatenate([[ma * ma], ref.m[inside] ** 2, [mb * mb]])
    elif kind == "envelope":
        y = np.concatenate([[ea], ref.env[inside], [eb]])
    else:
        y = np.abs(np.concatenate([[ma], ref.m[inside], [mb]]))
    return float(kernels.segment_trapz(t, y, [0], [len(t) - 1])[0])


@dataclass(frozen=True)
class EnvelopeLobe:
    id: str
    polarity: str
    t_start: float
    t_end: float
    area: float
    frame_id: str
    integrand: str | None = None

    def __post_init__(self):
        if self.polarity not in (POS, NEG):
            raise ValueError(f"polarity must be {POS!r} or {NEG!r}")
        if not self.area >= 0:
            raise ValueError("lobe area must be nonnegative")

    def to_dict(self):
        return {"id": self.id, "polarity": self.polarity, "t_start": self.t_start,
                "t_end": self.t_end, "area": self.area, "frame": self.frame_id,
                "integrand": self.integrand}


def segment_lobes(w: Waveform, env: Envelope, integrand: str = "envelope") -> list[EnvelopeLobe]:
    """Split ``w`` into maximal same-sign runs between zero crossings.

    Lobes are labelled L1, L2, ... from left to right. A waveform that never
    changes sign yields one frame-spanning lobe and a ``NoCrossingsWarning``.
    """
    if len(env) != len(w):
        raise ValidationError(["envelope and waveform grids differ"])
    ref = _refine(w, env)
    bounds = np.concatenate([[0], ref.crossings, [len(ref.t) - 1]]).astype(np.int64)
    starts, stops = bounds[:-1], bounds[1:]
    keep = stops > starts
    starts, stops = starts[keep], stops[keep]
    if len(starts) == 1:
        warnings.warn(f"frame {w.frame_id!r}: waveform never changes sign", NoCrossingsWarning,
                      stacklevel=2)
    y = _integrand(ref, integrand)
    areas = kernels.segment_trapz(ref.t, y, starts, stops)
    lobes = []
    for k, (a, b, area) in enumerate(zip(starts, stops, areas), start=1):
        seg = ref.m[a:b + 1]
        polarity = NEG if seg[np.argmax(np.abs(seg))] < 0 else POS
        lobes.append(EnvelopeLobe(f"L{k}", polarity, float(ref.t[a]), float(ref.t[b]),
                                  max(float(area), 0.0), w.frame_id, integrand))
    return lobes


def lobe_area(w: Waveform, env: Envelope, lobe: EnvelopeLobe, integrand: str = "envelope") -> float:
    """Trapezoid integral of env(t) or m(t)^2 over the lobe support."""
    lo, hi = w.span
    slack = 1e-9 * max(1.0, hi - lo)
    if lobe.t_start < lo - slack or lobe.t_end > hi + slack or not lobe.t_start < lobe.t_end:
        raise SupportOutOfFrame(
            f"lobe {lobe.id} support [{lobe.t_start}, {lobe.t_end}] not inside [{lo}, {hi}]"
        )
    ref = _refine(w, env)
    _integrand(ref, integrand)
    return max(_window(ref, max(lobe.t_start, lo), min(lobe.t_end, hi), integrand), 0.0)


def waveform_energy(w: Waveform, t0: float | None = None, t1: float | None = None) -> float:
    """Trapezoid integral of |m(t)|^2 over [t0, t1] (defaults to the whole frame)."""
    lo, hi = w.span
    t0 = lo if t0 is None else float(t0)
    t1 = hi if t1 is None else float(t1)
    if not t0 < t1:
        raise BadWindow(f"window [{t0}, {t1}] is empty")
    slack = 1e-9 * max(1.0, hi - lo)
    if t0 < lo - slack or t1 > hi + slack:
        raise BadWindow(f"window [{t0}, {t1}] leaves the frame [{lo}, {hi}]")
    return _window(_refine(w, None), max(t0, lo), min(t1, hi), "squared")


# --- dissipation and relaxed proximity -------------------------------------------------


@dataclass(frozen=True)
class DissipationRecord:
    kind: str  # "within-frame" | "between-frames"
    refs: tuple[str, str]
    first: float
    second: float
    e_diss: float

    def to_dict(self):
        return {"kind": self.kind, "refs": list(self.refs), "first": self.first,
                "second": self.second, "e_diss": self.e_diss}


def _ref(lobe: EnvelopeLobe) -> str:
    return f"{lobe.frame_id}:{lobe.id}{lobe.polarity}"


def dissipation_within_frame(lobe_plus: EnvelopeLobe, lobe_minus: EnvelopeLobe) -> DissipationRecord:
    if lobe_plus.frame_id != lobe_minus.frame_id:
        raise FrameMismatch(f"lobes come from frames {lobe_plus.frame_id!r} and {lobe_minus.frame_id!r}")
    return DissipationRecord("within-frame", (_ref(lobe_plus), _ref(lobe_minus)),
                             lobe_plus.area, lobe_minus.area,
                             abs(lobe_plus.area - lobe_minus.area))


def dissipation_between_frames(lobe_t: EnvelopeLobe, lobe_t2: EnvelopeLobe) -> DissipationRecord:
    if (lobe_t.id, lobe_t.polarity) != (lobe_t2.id, lobe_t2.polarity):
        raise LobeIdMismatch(f"{_ref(lobe_t)} and {_ref(lobe_t2)} are not the same lobe location")
    if lobe_t.frame_id == lobe_t2.frame_id:
        raise FrameMismatch(f"both lobes come from frame {lobe_t.frame_id!r}")
    return DissipationRecord("between-frames", (_ref(lobe_t), _ref(lobe_t2)),
                             lobe_t.area, lobe_t2.area, abs(lobe_t.area - lobe_t2.area))


@dataclass(frozen=True)
class ProximityVerdict:
    refs: tuple[str, str]
    epsilon: float
    difference: float
    near: bool

    def to_dict(self):
        return {"refs": list(self.refs), "epsilon": self.epsilon,
                "difference": self.difference, "near": self.near}


def relaxed_near(a: float, b: float, eps: float, refs: tuple[str, str] = ("a", "b")) -> ProximityVerdict:
    """a and b are relaxed-near when |a - b| < eps (strict)."""
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError("epsilon must be a positive finite number")
    diff = abs(a - b)
    return ProximityVerdict(tuple(refs), float(eps), diff, diff < eps)


# --- per-frame lobe tables ------------------------------------------------------------


@dataclass
class FrameLobes:
    """Lobe table of one frame: label -> {polarity: lobe}.

    A row labelled ``L2k`` pairs the opposite-polarity lobes L(2k-1) and L2k.
    """

    frame_id: str
    rows: dict[str, dict[str, EnvelopeLobe]]
    lobes: list[EnvelopeLobe] = field(default_factory=list)
    unpaired: list[str] = field(default_factory=list)

    @classmethod
    def from_areas(cls, frame_id: str, rows: Iterable[tuple[str, float, float]]) -> "FrameLobes":
        table = {}
        for label, pos_area, neg_area in rows:
            table[label] = {
                POS: EnvelopeLobe(label, POS, 0.0, 1.0, float(pos_area), str(frame_id)),
                NEG: EnvelopeLobe(label, NEG, 0.0, 1.0, float(neg_area), str(frame_id)),
            }
        return cls(str(frame_id), table)

    @classmethod
    def from_lobes(cls, lobes: Sequence[EnvelopeLobe]) -> "FrameLobes":
        if not lobes:
            raise ValueError("no lobes to pair")
        frame = lobes[0].frame_id
        rows = {}
        for first, second in zip(lobes[0::2], lobes[1::2]):
            label = second.id
            rows[label] = {
                first.polarity: EnvelopeLobe(label, first.polarity, first.t_start, first.t_end,
                                             first.area, frame, first.integrand),
                second.polarity: EnvelopeLobe(label, second.polarity, second.t_start,
                                              second.t_end, second.area, frame, second.integrand),
            }
        unpaired = [lobes[-1].id] if len(lobes) % 2 else []
        rows = {k: v for k, v in rows.items() if len(v) == 2}
        return cls(frame, rows, list(lobes), unpaired)

    def lobe(self, label: str, polarity: str) -> EnvelopeLobe:
        return self.rows[label][polarity]


@dataclass
class StabilityReport:
    epsilon: float
    frames: list[str]
    within: list[tuple[DissipationRecord, ProximityVerdict]]
    between: list[tuple[DissipationRecord, ProximityVerdict]]
    tables: dict[str, list[tuple[str, float, float, float]]]
    stable_frames: list[str]
    stable_segments: list[tuple[str, str]]
    stable_lobes: list[str]
    notes: list[str] = field(default_factory=list)
    expectations: list[dict] = field(default_factory=list)

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "frames": self.frames,
            "tables": {f: [{"lobe": l, "pos_area": p, "neg_area": n, "e_diss": d}
                           for l, p, n, d in rows] for f, rows in self.tables.items()},
            "within": [{**r.to_dict(), "verdict": v.to_dict()} for r, v in self.within],
            "between": [{**r.to_dict(), "verdict": v.to_dict()} for r, v in self.between],
            "stable_frames": self.stable_frames,
            "stable_segments": [{"lobe": l, "polarity": p} for l, p in self.stable_segments],
            "stable_lobes": self.stable_lobes,
            "expectations": self.expectations,
            "notes": self.notes,
        }

    def to_text(self) -> str:
        out = []
        for frame in self.frames:
            out.append(f"Frame {frame}")
            out.append(f"{'Lobe':<6}| {'+ve Lobe Areas':>15} | {'-ve Lobe Areas':>15} | "
                       f"{'Energy Dissipation':>18}")
            out.append("-" * 64)
            for label, pos, neg, diss in self.tables[frame]:
                out.append(f"{label:<6}| {pos:>15.4f} | {neg:>15.4f} | {diss:>18.4f}")
            out.append("")
        out.append(f"Relaxed proximity verdicts (epsilon = {self.epsilon:g}, near iff |E - E'| < epsilon)")
        for rec, v in self.within + self.between:
            word = "near" if v.near else "not near"
            out.append(f"  {rec.kind:<15} {rec.refs[0]:>14} ~ {rec.refs[1]:<14} "
                       f"|{rec.first:.4f} - {rec.second:.4f}| = {rec.e_diss:.4f}  {word}")
        out.append("")
        out.append("Stable frames: " + (", ".join(self.stable_frames) or "none"))
        out.append("Stable lobe segments: "
                   + (", ".join(f"{l}{p}" for l, p in self.stable_segments) or "none"))
        out.append("Stable lobes (both polarities): " + (", ".join(self.stable_lobes) or "none"))
        for note in self.notes:
            out.append(f"NOTE: {note}")
        return "\n".join(out) + "\n"


def stability_report(frames: Sequence[FrameLobes], eps: float,
                     expected: Sequence[dict] = (), stated_epsilon: float | None = None) -> StabilityReport:
    """Within-frame and between-frame dissipation with relaxed-proximity verdicts.

    Between-frame records are made for every ordered frame pair (i < j in the
    given order) and every lobe label and polarity the two frames share. A
    lobe segment is stable when all of its between-frame verdicts are near.

    ``expected`` lists claimed verdicts (see ``check_expectations``); when
    given, the report notes which claims fail at ``eps`` and the range of
    epsilon that would reproduce all of them.
    """
    if not frames:
        raise ValueError("need at least one frame")
    within, between, tables = [], [], {}
    stable_frames = []
    for fr in frames:
        rows, ok = [], True
        for label, pair in fr.rows.items():
            rec = dissipation_within_frame(pair[POS], pair[NEG])
            v = relaxed_near(pair[POS].area, pair[NEG].area, eps, rec.refs)
            within.append((rec, v))
            rows.append((label, pair[POS].area, pair[NEG].area, rec.e_diss))
            ok &= v.near
        tables[fr.frame_id] = rows
        if ok and rows:
            stable_frames.append(fr.frame_id)
    seg_verdicts: dict[tuple[str, str], list[bool]] = {}
    for fa, fb in combinations(frames, 2):
        for label in fa.rows:
            if label not in fb.rows:
                continue
            for pol in (POS, NEG):
                a, b = fa.lobe(label, pol), fb.lobe(label, pol)
                rec = dissipation_between_frames(a, b)
                v = relaxed_near(a.area, b.area, eps, rec.refs)
                between.append((rec, v))
                seg_verdicts.setdefault((label, pol), []).append(v.near)
    stable_segments = [k for k, vs in seg_verdicts.items() if all(vs)]
    labels = dict.fromkeys(l for l, _ in seg_verdicts)
    stable_lobes = [l for l in labels if (l, POS) in stable_segments and (l, NEG) in stable_segments]
    report = StabilityReport(float(eps), [f.frame_id for f in frames], within, between, tables,
                             stable_frames, stable_segments, stable_lobes)
    if expected:
        check_expectations(report, expected, stated_epsilon)
    return report


def _expected_key(claim):
    if claim["kind"] == "within":
        return ("within-frame", f"{claim['frame']}:{claim['lobe']}{POS}",
                f"{claim['frame']}:{claim['lobe']}{NEG}")
    a, b = claim["frames"]
    pol = claim["polarity"]
    return ("between-frames", f"{a}:{claim['lobe']}{pol}", f"{b}:{claim['lobe']}{pol}")


def check_expectations(report: StabilityReport, expected: Sequence[dict],
                       stated_epsilon: float | None = None) -> None:
    """Compare claimed verdicts with the report and annotate it in place.

    Each claim is ``{"kind": "within", "frame", "lobe", "near"}`` or
    ``{"kind": "between", "frames": [a, b], "lobe", "polarity", "near"}``.
    """
    index = {(r.kind, *r.refs): (r, v) for r, v in report.within + report.between}
    lower, upper = 0.0, math.inf
    failures = []
    for claim in expected:
        key = _expected_key(claim)
        if key not in index:
            report.notes.append(f"claimed verdict for {key[1]} ~ {key[2]} has no matching record")
            continue
        rec, v = index[key]
        want = bool(claim["near"])
        entry = {"refs": [key[1], key[2]], "claimed_near": want, "near": v.near,
                 "difference": rec.e_diss, "agrees": v.near == want}
        if "label" in claim:
            entry["label"] = claim["label"]
        report.expectations.append(entry)
        if want:
            lower = max(lower, rec.e_diss)
        else:
            upper = min(upper, rec.e_diss)
        if v.near != want:
            failures.append(entry)
    consistent = lower < upper
    rng = f"({lower:.4f}, {upper:.4f}]" if math.isfinite(upper) else f"({lower:.4f}, inf)"
    for f in failures:
        word = "near" if f["claimed_near"] else "not near"
        report.notes.append(
            f"{f['refs'][0]} ~ {f['refs'][1]} is claimed {word} but |difference| = "
            f"{f['difference']:.4f} at epsilon = {report.epsilon:g}"
        )
    if stated_epsilon is not None:
        ok = consistent and lower < stated_epsilon <= upper
        if not ok:
            if consistent:
                report.notes.append(
                    f"stated epsilon {stated_epsilon:g} does not reproduce the claimed verdicts; "
                    f"epsilon in {rng} does"
                )
            else:
                report.notes.append(
                    f"no epsilon reproduces every claimed verdict (near needs epsilon > "
                    f"{lower:.4f}, not-near needs epsilon <= {upper:.4f})"
                )
    if consistent and not failures and stated_epsilon is None:
        report.notes.append(f"claimed verdicts hold for epsilon in {rng}")


# --- plot data --------------------------------------------------------------------------


def plot_rows(w: Waveform, env: Envelope, lobes: Sequence[EnvelopeLobe]) -> list[tuple]:
    """(t, m, envelope, lobe id) per sample."""
    starts = np.array([l.t_start for l in lobes])
    rows = []
    for t, m, e in zip(w.t, w.m, env.values):
        k = int(np.searchsorted(starts, t, side="right")) - 1
        rows.append((float(t), float(m), float(e), lobes[max(k, 0)].id if lobes else ""))
    return rows


def write_svg(path, w: Waveform, env: Envelope, lobes: Sequence[EnvelopeLobe]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(9, 3.5))
    ax.plot(w.t, w.m, lw=0.8, color="k", label="m(t)")
    ax.plot(w.t, env.values, lw=1.0, color="tab:red", label=f"envelope ({env.mode})")
    for lobe in lobes:
        mask = (w.t >= lobe.t_start) & (w.t <= lobe.t_end)
        ax.fill_between(w.t[mask], 0, w.m[mask], alpha=0.25,
                        color="tab:blue" if lobe.polarity == POS else "tab:orange")
        mid = 0.5 * (lobe.t_start + lobe.t_end)
        ax.annotate(lobe.id, (mid, 0), ha="center", va="bottom", fontsize=7)
    ax.set_xlabel("t [s]")
    ax.set_title(f"frame {w.frame_id}")
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
