"""Loading and validating input files.

Every loader raises ``ValidationError`` carrying all findings for the file,
not just the first one.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .description import DescribedSet, FeatureChain, Probe, ProbeSuite
from .dynamics import DescriptiveSystem
from .errors import DescproxError, InvalidChain, ValidationError
from .waveform import UNIFORM_RTOL, FrameLobes, Waveform


@dataclass(frozen=True)
class Finding:
    path: str
    location: str
    message: str
    code: str = "invalid"

    def __str__(self):
        loc = f" [{self.location}]" if self.location else ""
        return f"{self.path}{loc}: {self.message}"

    def to_dict(self):
        return {"path": self.path, "location": self.location, "message": self.message,
                "code": self.code}


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_dict(self):
        return {"ok": self.ok, "findings": [f.to_dict() for f in self.findings]}


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError([Finding(str(path), "", f"cannot read file: {exc.strerror}", "io")])
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise ValidationError([Finding(str(path), "", f"invalid JSON: {exc}", "schema")])


# --- described sets ----------------------------------------------------------------------


def _finite_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def parse_described_set(doc: dict, path: str = "<memory>", where: str = "") -> tuple[DescribedSet | None, list[Finding]]:
    findings = []
    prefix = f"{where}." if where else ""

    def bad(loc, msg, code="schema"):
        findings.append(Finding(path, prefix + loc, msg, code))

    if not isinstance(doc, dict):
        bad("", "described set must be an object")
        return None, findings
    for key in ("id", "elements", "probes"):
        if key not in doc:
            bad(key, "missing required field")
    if findings:
        return None, findings
    probes = doc["probes"]
    if not isinstance(probes, list) or not probes:
        bad("probes", "must be a nonempty list")
        return None, findings
    names, units = [], []
    for k, p in enumerate(probes):
        if not isinstance(p, dict) or "name" not in p:
            bad(f"probes[{k}]", "probe needs a name")
            continue
        names.append(str(p["name"]))
        units.append(str(p.get("unit", "")))
    if len(set(names)) != len(names):
        bad("probes", f"probe names must be unique: {names}")
    elements = doc["elements"]
    if not isinstance(elements, list) or not elements:
        bad("elements", "must be a nonempty list")
        return None, findings
    rows: dict[str, dict[str, float]] = {}
    integer_valued = True
    for k, el in enumerate(elements):
        if not isinstance(el, dict) or "handle" not in el or not isinstance(el.get("features"), dict):
            bad(f"elements[{k}]", "element needs a handle and a features object")
            continue
        feats = el["features"]
        for name in names:
            if name not in feats:
                bad(f"elements[{k}].features.{name}", "missing probe value", "probe")
            elif not _finite_number(feats[name]):
                bad(f"elements[{k}].features.{name}", f"value {feats[name]!r} is not a finite number",
                    "finite")
            elif not float(feats[name]).is_integer():
                integer_valued = False
        handle = str(el["handle"])
        if handle in rows:
            bad(f"elements[{k}].handle", f"duplicate handle {handle!r}")
        rows[handle] = {n: float(feats[n]) for n in names if _finite_number(feats.get(n))}
    if findings:
        return None, findings
    suite = ProbeSuite.lookup(names, units, integer_valued=integer_valued)
    return DescribedSet.from_features(str(doc["id"]), rows, suite), findings


def load_described_sets(path) -> tuple[list[DescribedSet], FeatureChain | None]:
    """Read one described set, a list of them, or ``{"sets": [...], "chain": [...]}``."""
    doc = read_json(path)
    chain_doc = None
    if isinstance(doc, dict) and "sets" in doc:
        chain_doc = doc.get("chain")
        docs = doc["sets"]
    elif isinstance(doc, list):
        docs = doc
    else:
        docs = [doc]
    sets, findings = [], []
    for k, d in enumerate(docs):
        s, f = parse_described_set(d, str(path), f"sets[{k}]")
        findings += f
        if s is not None:
            sets.append(s)
    ids = [s.id for s in sets]
    if len(set(ids)) != len(ids):
        findings.append(Finding(str(path), "sets", f"set ids must be unique: {ids}"))
    if sets:
        first = sets[0].suite.names
        for s in sets[1:]:
            if s.suite.names != first:
                findings.append(Finding(str(path), f"sets[{s.id}].probes",
                                        f"probes {list(s.suite.names)} differ from {list(first)}",
                                        "suite"))
    chain = None
    if chain_doc is not None and sets:
        try:
            chain = FeatureChain.from_names(sets[0].suite, chain_doc)
            chain.validate_for(sets[0].suite)
        except InvalidChain as exc:
            findings.append(Finding(str(path), "chain", str(exc), "InvalidChain"))
    if findings:
        raise ValidationError(findings)
    return sets, chain


# --- lobe tables and waveforms ----------------------------------------------------------


LOBE_HEADER = ["frame", "lobe", "pos_area", "neg_area"]


def load_lobe_table(path) -> list[FrameLobes]:
    """Read a ``frame,lobe,pos_area,neg_area`` CSV into per-frame lobe tables."""
    path = Path(path)
    findings = []
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ValidationError([Finding(str(path), "", f"cannot read file: {exc.strerror}", "io")])
    frames: dict[str, list[tuple[str, float, float]]] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != LOBE_HEADER:
            raise ValidationError([Finding(str(path), "row 1",
                                           f"header must be {','.join(LOBE_HEADER)}", "schema")])
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                findings.append(Finding(str(path), f"row {rowno}", "expected 4 columns", "schema"))
                continue
            frame, lobe = row[0].strip(), row[1].strip()
            vals = []
            for col, raw in zip(LOBE_HEADER[2:], row[2:]):
                try:
                    v = float(raw)
                except ValueError:
                    findings.append(Finding(str(path), f"row {rowno}, column {col}",
                                            f"{raw!r} is not a number", "schema"))
                    continue
                if not math.isfinite(v):
                    findings.append(Finding(str(path), f"row {rowno}, column {col}",
                                            f"non-finite value {raw.strip()}", "finite"))
                elif v < 0:
                    findings.append(Finding(str(path), f"row {rowno}, column {col}",
                                            "areas must be nonnegative", "range"))
                vals.append(v)
            if len(vals) == 2:
                rows = frames.setdefault(frame, [])
                if any(r[0] == lobe for r in rows):
                    findings.append(Finding(str(path), f"row {rowno}",
                                            f"duplicate lobe {lobe!r} in frame {frame!r}"))
                rows.append((lobe, vals[0], vals[1]))
    if findings:
        raise ValidationError(findings)
    if not frames:
        raise ValidationError([Finding(str(path), "", "no lobe rows", "schema")])
    return [FrameLobes.from_areas(f, rows) for f, rows in frames.items()]


def _waveform_findings(path, t, m, bad_rows):
    findings = list(bad_rows)
    if len(t) >= 2:
        dt = np.diff(t)
        if np.any(dt <= 0):
            k = int(np.argmax(dt <= 0)) + 3
            findings.append(Finding(path, f"row {k}, column t", "times must strictly increase",
                                    "uniform"))
        else:
            step = (t[-1] - t[0]) / (len(t) - 1)
            dev = np.abs(dt - step)
            if np.max(dev) > UNIFORM_RTOL * step:
                k = int(np.argmax(dev)) + 3
                findings.append(Finding(path, f"row {k}, column t",
                                        f"sample spacing deviates from uniform dt={step:g}",
                                        "uniform"))
    return findings


def load_waveform_csv(path, frame_id: str | None = None) -> Waveform:
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ValidationError([Finding(str(path), "", f"cannot read file: {exc.strerror}", "io")])
    findings, t, m = [], [], []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "m"]:
            raise ValidationError([Finding(str(path), "row 1", "header must be t,m", "schema")])
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                findings.append(Finding(str(path), f"row {rowno}", "expected 2 columns", "schema"))
                continue
            vals = []
            for col, raw in zip("tm", row):
                try:
                    v = float(raw)
                except ValueError:
                    findings.append(Finding(str(path), f"row {rowno}, column {col}",
                                            f"{raw!r} is not a number", "schema"))
                    v = math.nan
                else:
                    if not math.isfinite(v):
                        findings.append(Finding(str(path), f"row {rowno}, column {col}",
                                                f"non-finite value {raw.strip()}", "finite"))
                vals.append(v)
            t.append(vals[0])
            m.append(vals[1])
    t_arr, m_arr = np.array(t), np.array(m)
    if not findings:
        findings = _waveform_findings(str(path), t_arr, m_arr, [])
    if len(t) < 8:
        findings.append(Finding(str(path), "", f"need at least 8 samples, got {len(t)}",
                                "TooFewSamples"))
    if findings:
        raise ValidationError(findings)
    return Waveform(t_arr, m_arr, frame_id if frame_id is not None else path.stem)


def write_waveform_csv(path, w: Waveform) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "m"])
        for t, m in zip(w.t, w.m):
            writer.writerow([repr(float(t)), repr(float(m))])


def load_frames_manifest(path) -> list[tuple[str, Path]]:
    """``{"frames": [{"id": ..., "csv": ...}, ...]}``; csv paths are relative to the manifest."""
    path = Path(path)
    doc = read_json(path)
    findings = []
    frames = doc.get("frames") if isinstance(doc, dict) else None
    if not isinstance(frames, list) or not frames:
        raise ValidationError([Finding(str(path), "frames", "must be a nonempty list", "schema")])
    out = []
    for k, fr in enumerate(frames):
        if not isinstance(fr, dict) or "id" not in fr or "csv" not in fr:
            findings.append(Finding(str(path), f"frames[{k}]", "frame needs id and csv", "schema"))
            continue
        csv_path = (path.parent / fr["csv"]).resolve()
        if not csv_path.exists():
            findings.append(Finding(str(path), f"frames[{k}].csv", f"no such file {fr['csv']}", "io"))
        out.append((str(fr["id"]), csv_path))
    ids = [i for i, _ in out]
    if len(set(ids)) != len(ids):
        findings.append(Finding(str(path), "frames", f"frame ids must be unique: {ids}"))
    if findings:
        raise ValidationError(findings)
    return out


_CLAIM_KEYS = {"within": ("frame", "lobe", "near"),
               "between": ("frames", "lobe", "polarity", "near")}


def load_expectations(path) -> tuple[list[dict], float | None]:
    doc = read_json(path)
    if isinstance(doc, list):
        claims, stated = doc, None
    elif isinstance(doc, dict) and isinstance(doc.get("claims"), list):
        claims, stated = doc["claims"], doc.get("stated_epsilon")
    else:
        raise ValidationError([Finding(str(path), "claims", "must be a list of claimed verdicts",
                                       "schema")])
    findings = []
    for k, c in enumerate(claims):
        kind = c.get("kind") if isinstance(c, dict) else None
        need = _CLAIM_KEYS.get(kind)
        if need is None:
            findings.append(Finding(str(path), f"claims[{k}].kind",
                                    "kind must be 'within' or 'between'", "schema"))
            continue
        for key in need:
            if key not in c:
                findings.append(Finding(str(path), f"claims[{k}].{key}", "missing required field",
                                        "schema"))
        if kind == "between" and "frames" in c and not (isinstance(c["frames"], list) and len(c["frames"]) == 2):
            findings.append(Finding(str(path), f"claims[{k}].frames", "must list two frame ids",
                                    "schema"))
    if stated is not None and not (_finite_number(stated) and stated > 0):
        findings.append(Finding(str(path), "stated_epsilon", f"must be > 0, got {stated!r}", "range"))
    if findings:
        raise ValidationError(findings)
    return claims, stated


# --- dynamical systems ------------------------------------------------------------------


def _probe_from_doc(doc: dict, path: str, k: int, findings: list) -> Probe | None:
    name = doc.get("name") if isinstance(doc, dict) else None
    if name is None:
        findings.append(Finding(path, f"probes[{k}]", "probe needs a name", "schema"))
        return None
    kind = doc.get("kind", "identity")
    unit = str(doc.get("unit", ""))
    if kind == "identity":
        return Probe(name, float, unit)
    if kind == "abs":
        return Probe(name, lambda x: abs(float(x)), unit)
    if kind == "square":
        return Probe(name, lambda x: float(x) ** 2, unit)
    if kind == "affine":
        a, b = float(doc.get("scale", 1.0)), float(doc.get("offset", 0.0))
        return Probe(name, lambda x: a * float(x) + b, unit)
    if kind == "round":
        digits = int(doc.get("digits", 0))
        return Probe(name, lambda x: round(float(x), digits), unit)
    if kind == "table":
        values = doc.get("values")
        if not isinstance(values, dict):
            findings.append(Finding(path, f"probes[{k}].values", "table probe needs a values object",
                                    "schema"))
            return None
        for key, v in values.items():
            if not _finite_number(v):
                findings.append(Finding(path, f"probes[{k}].values.{key}",
                                        f"value {v!r} is not a finite number", "finite"))
        table = {str(key): float(v) for key, v in values.items() if _finite_number(v)}
        return Probe(name, lambda x: table[str(x)], unit)
    findings.append(Finding(path, f"probes[{k}].kind", f"unknown probe kind {kind!r}", "schema"))
    return None


def _map_from_doc(doc: dict, path: str, findings: list):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "identity":
        return lambda x: x
    if kind == "negation":
        return lambda x: -x
    if kind == "logistic":
        r = float(doc.get("r", 4.0))
        return lambda x: r * x * (1.0 - x)
    if kind == "constant":
        c = doc.get("value")
        return lambda x: c
    if kind == "table":
        pairs = doc.get("pairs")
        if not isinstance(pairs, list):
            findings.append(Finding(path, "map.pairs", "table map needs a list of pairs", "schema"))
            return None
        return {p[0]: p[1] for p in pairs}
    findings.append(Finding(path, "map.kind", f"unknown map kind {kind!r}", "schema"))
    return None


def parse_system(doc: dict, path: str = "<memory>", cells: int | None = None,
                 tau_eq: float | None = None) -> DescriptiveSystem:
    findings: list[Finding] = []
    if not isinstance(doc, dict):
        raise ValidationError([Finding(path, "", "system must be an object", "schema")])
    for key in ("space", "map"):
        if key not in doc:
            findings.append(Finding(path, key, "missing required field", "schema"))
    if findings:
        raise ValidationError(findings)
    probes = [_probe_from_doc(p, path, k, findings) for k, p in enumerate(doc.get("probes") or [])]
    fmap = _map_from_doc(doc["map"], path, findings)
    space = doc["space"]
    kw = {} if tau_eq is None else {"tau_eq": tau_eq}
    if findings:
        raise ValidationError(findings)
    suite = ProbeSuite([p for p in probes if p is not None]) if probes else None
    try:
        if space.get("kind") == "grid":
            n = int(cells if cells is not None else space.get("cells", 256))
            lo, hi = float(space["lo"]), float(space["hi"])
            f = fmap.__getitem__ if isinstance(fmap, dict) else fmap
            return DescriptiveSystem.on_grid(lo, hi, n, f, suite, **kw)
        if space.get("kind") == "finite":
            return DescriptiveSystem.on_states(space["states"], fmap, suite, **kw)
    except (KeyError, TypeError) as exc:
        raise ValidationError([Finding(path, "space", f"incomplete space definition: {exc}",
                                       "schema")])
    except DescproxError as exc:
        raise ValidationError([Finding(path, "map", str(exc), type(exc).__name__)])
    except ValueError as exc:
        raise ValidationError([Finding(path, "space", str(exc), "schema")])
    raise ValidationError([Finding(path, "space.kind", f"unknown space kind {space.get('kind')!r}",
                                   "schema")])


def load_system(path, cells: int | None = None, tau_eq: float | None = None):
    doc = read_json(path)
    return parse_system(doc, str(path), cells, tau_eq), doc


# --- whole-run validation ---------------------------------------------------------------


def _sniff(path: Path) -> str:
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            header = fh.readline().strip().replace(" ", "")
        return "lobe-table" if header == ",".join(LOBE_HEADER) else "waveform"
    doc = read_json(path)
    if isinstance(doc, dict) and "frames" in doc:
        return "frames"
    if isinstance(doc, dict) and "space" in doc:
        return "system"
    if isinstance(doc, dict) and isinstance(doc.get("claims"), list):
        return "expectations"
    return "sets"


def validate_inputs(paths, config: dict | None = None) -> ValidationReport:
    """Check every input (schema, finiteness, uniform spacing, chain nesting)
    and every tolerance in ``config``; collect all findings."""
    report = ValidationReport()
    for key, value in (config or {}).items():
        if key in ("epsilon", "tau_eq", "tau_conv", "tau_env") and value is not None:
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                report.findings.append(Finding("<config>", key, f"must be > 0, got {value!r}",
                                               "range"))
        if key in ("cells",) and value is not None and int(value) < 2:
            report.findings.append(Finding("<config>", key, "need at least 2 cells", "range"))
        if key in ("m_max", "n_max") and value is not None and int(value) < 1:
            report.findings.append(Finding("<config>", key, "must be at least 1", "range"))
    for p in paths:
        p = Path(p)
        if not p.exists():
            report.findings.append(Finding(str(p), "", "no such file", "io"))
            continue
        try:
            kind = _sniff(p)
            if kind == "lobe-table":
                load_lobe_table(p)
            elif kind == "waveform":
                load_waveform_csv(p)
            elif kind == "frames":
                for fid, csv_path in load_frames_manifest(p):
                    try:
                        load_waveform_csv(csv_path, fid)
                    except ValidationError as exc:
                        report.findings.extend(exc.findings)
            elif kind == "system":
                load_system(p)
            elif kind == "expectations":
                load_expectations(p)
            else:
                load_described_sets(p)
        except ValidationError as exc:
            report.findings.extend(
                f if isinstance(f, Finding) else Finding(str(p), "", str(f)) for f in exc.findings
            )
    return report
