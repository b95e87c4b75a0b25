"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels, selftest
from .description import (TAU_CONV, cardinality_gap, descriptive_distance, descriptively_near,
                          indefinite_descriptive_distance)
from .dynamics import (CompactFamily, check_descriptive_sensitivity,
                       check_descriptive_transitivity, check_periodic_density,
                       first_return_table, orbit, periodic_set)
from .errors import DescproxError, ValidationError
from .hausdorff import (DescribedCollection, ball, distance_matrix, matrix_to_csv,
                        verify_topology_axioms)
from .io import (Finding, load_described_sets, load_expectations, load_frames_manifest,
                 load_lobe_table, load_system, load_waveform_csv, sha256, validate_inputs)
from .waveform import (FrameLobes, hilbert_envelope, plot_rows, segment_lobes,
                       stability_report, write_svg)

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTE = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    epsilon: float = 0.2
    tau_eq: float | None = None
    tau_conv: float = TAU_CONV
    envelope_mode: str = "analytic"
    integrand: str = "envelope"
    norm: str = "euclidean"
    cells: int | None = None
    m_max: int = 8
    n_max: int = 10
    radii: list[float] = field(default_factory=list)
    frames: str | None = None
    lobe_table: str | None = None
    expect: str | None = None
    stated_epsilon: float | None = None
    out: str | None = None
    report: str = "json"
    plot: str | None = None
    seed: int = 0
    workers: int = 1

    def input_paths(self) -> list[str]:
        paths = list(self.inputs)
        for p in (self.frames, self.lobe_table, self.expect):
            if p:
                paths.append(p)
        return paths


@dataclass
class RunManifest:
    config: dict
    inputs: dict[str, str]
    version: str
    backend: str
    outputs: dict
    timings: dict[str, float]
    text: str = ""

    def payload(self) -> dict:
        """Everything except timings; identical across reruns on identical inputs."""
        return {"config": self.config, "inputs": self.inputs, "version": self.version,
                "outputs": self.outputs}

    def to_dict(self):
        return {**self.payload(), "backend": self.backend, "timings": self.timings}


def _timed(timings, name, fn, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    timings[name] = time.perf_counter() - start
    return out


# --- commands ---------------------------------------------------------------------------


def _cmd_distances(cfg: RunConfig, timings, files):
    (path,) = cfg.inputs
    sets, chain = load_described_sets(path)
    coll = DescribedCollection(sets)
    ids = list(coll.ids)
    n = len(sets)
    dphi = np.zeros((n, n))
    near = []
    for i in range(n):
        for j in range(n):
            dphi[i, j] = descriptive_distance(sets[i], sets[j], cfg.norm)
    tol = cfg.tau_eq
    for i in range(n):
        for j in range(i, n):
            near.append({"a": ids[i], "b": ids[j],
                         "near": descriptively_near(sets[i], sets[j], tol, cfg.norm),
                         "cardinality_gap": cardinality_gap(sets[i], sets[j])})
    dh = _timed(timings, "hausdorff_matrix", distance_matrix, coll, cfg.norm, cfg.workers)
    out = {"ids": ids, "descriptive_distance": dphi.tolist(),
           "descriptive_hausdorff": dh.tolist(), "near": near}
    if chain is not None:
        out["indefinite"] = [
            {"a": ids[i], "b": ids[j],
             **indefinite_descriptive_distance(sets[i], sets[j], chain, cfg.tau_conv,
                                               cfg.norm).to_dict()}
            for i in range(n) for j in range(i + 1, n)
        ]
    files["descriptive_distance.csv"] = matrix_to_csv(ids, dphi)
    files["descriptive_hausdorff.csv"] = matrix_to_csv(ids, dh)
    text = ["d^Phi (descriptive distance)", matrix_to_csv(ids, dphi),
            "d_H^Phi (descriptive Hausdorff distance)", matrix_to_csv(ids, dh)]
    text += [f"{r['a']} ~ {r['b']}: {'near' if r['near'] else 'not near'}" for r in near]
    return out, "\n".join(text) + "\n"


def _cmd_topology(cfg: RunConfig, timings, files):
    (path,) = cfg.inputs
    sets, _ = load_described_sets(path)
    coll = DescribedCollection(sets)
    radii = cfg.radii or [1.0]
    balls = [ball(coll, c, r, cfg.norm) for r in radii for c in coll.ids]
    report = _timed(timings, "verify_topology_axioms", verify_topology_axioms, coll, balls, cfg.norm)
    dh = distance_matrix(coll, cfg.norm, cfg.workers)
    files["descriptive_hausdorff.csv"] = matrix_to_csv(list(coll.ids), dh)
    files["axioms.json"] = report.to_json(indent=2) + "\n"
    out = {"balls": [b.to_dict() for b in balls], "axioms": report.to_dict()}
    lines = [f"ball({b.center}, {b.radius:g}) = {{{', '.join(sorted(b.members))}}}" for b in balls]
    lines += [f"{name}: {'pass' if ok else 'FAIL'}" for name, ok in report.passed.items()]
    return out, "\n".join(lines) + "\n"


def _jsonable_state(s):
    return s if isinstance(s, (int, float, str)) else str(s)


def _state_list(sys, states):
    return sorted((_jsonable_state(s) for s in states), key=lambda s: (isinstance(s, str), s))


def _interval(sys, doc):
    if isinstance(doc, dict):
        return sys.cells(float(doc["lo"]), float(doc["hi"]), doc.get("closed", "both"))
    return frozenset(sys.states[sys.index_of(s)] for s in doc)


def _cmd_dynamics(cfg: RunConfig, timings, files):
    (path,) = cfg.inputs
    sys_, doc = load_system(path, cfg.cells, cfg.tau_eq)
    out = {"states": len(sys_), "m_max": cfg.m_max}
    per = {}
    for m in range(1, cfg.m_max + 1):
        raw = periodic_set(sys_, m, "raw")
        desc = periodic_set(sys_, m, "descriptive")
        per[str(m)] = {"raw": _state_list(sys_, raw), "descriptive": _state_list(sys_, desc),
                       "raw_subset_of_descriptive": raw <= desc}
    out["periodic_sets"] = per
    first = _timed(timings, "first_return", first_return_table, sys_, cfg.m_max)
    out["minimal_periods"] = {str(m): int(np.sum(first == m)) for m in range(1, cfg.m_max + 1)}
    out["minimal_periods"]["none"] = int(np.sum(first == 0))
    extra = [list(_interval(sys_, s)) for s in doc.get("family", [])]
    fam = CompactFamily.singletons(sys_, extra)
    queries = doc.get("queries", {})
    for seed in queries.get("orbits", []):
        out.setdefault("orbits", []).append(orbit(sys_, seed["x"], int(seed.get("n", 10))).to_dict())
    if "transitivity" in queries:
        q = queries["transitivity"]
        rep = check_descriptive_transitivity(sys_, fam, _interval(sys_, q["U"]),
                                             _interval(sys_, q["V"]), int(q.get("n_max", cfg.n_max)))
        out["transitivity"] = rep.to_dict()
    if "sensitivity" in queries:
        q = queries["sensitivity"]
        rep = check_descriptive_sensitivity(sys_, fam, _interval(sys_, q["U"]), float(q["delta"]),
                                            int(q.get("n_max", cfg.n_max)),
                                            q.get("reading", "hausdorff"), cfg.norm)
        out["sensitivity"] = rep.to_dict()
    if "density" in queries:
        q = queries["density"]
        rep = check_periodic_density(sys_, fam, float(q["r"]), int(q.get("m_max", cfg.m_max)),
                                     cfg.norm)
        out["density"] = rep.to_dict()
    out = json.loads(json.dumps(out, default=_jsonable_state))
    lines = [f"states: {len(sys_)}"]
    for m, v in per.items():
        lines.append(f"Per_{m}: raw {len(v['raw'])}, descriptive {len(v['descriptive'])}")
    for key in ("transitivity", "sensitivity"):
        if key in out:
            lines.append(f"{key}: {'witness ' + json.dumps(out[key]['witness']) if out[key]['found'] else 'exhausted'}")
    if "density" in out:
        unc = out["density"]["uncovered"]
        head = ", ".join(map(str, unc[:10])) + (", ..." if len(unc) > 10 else "")
        total = len(out["density"]["coverage"])
        lines.append("density: all covered" if not unc
                     else f"density: {len(unc)} of {total} members uncovered [{head}]")
    return out, "\n".join(lines) + "\n"


def _cmd_energy(cfg: RunConfig, timings, files):
    if not cfg.lobe_table and not cfg.frames:
        raise ValidationError([Finding("<config>", "energy", "need --lobe-table or --frames")])
    frames: list[FrameLobes] = []
    if cfg.lobe_table:
        frames += load_lobe_table(cfg.lobe_table)
    segmented = {}
    if cfg.frames:
        for fid, csv_path in load_frames_manifest(cfg.frames):
            w = load_waveform_csv(csv_path, fid)
            env = hilbert_envelope(w, cfg.envelope_mode)
            lobes = segment_lobes(w, env, cfg.integrand)
            segmented[fid] = (w, env, lobes)
            frames.append(FrameLobes.from_lobes(lobes))
    expected, stated = ((), None)
    if cfg.expect:
        expected, stated = load_expectations(cfg.expect)
    if cfg.stated_epsilon is not None:
        stated = cfg.stated_epsilon
    rep = _timed(timings, "stability_report", stability_report, frames, cfg.epsilon, expected, stated)
    out = rep.to_dict()
    if segmented:
        out["lobes"] = {fid: [l.to_dict() for l in lobes] for fid, (_, _, lobes) in segmented.items()}
    if cfg.plot:
        plot_dir = Path(cfg.plot)
        plot_dir.mkdir(parents=True, exist_ok=True)
        for fid, (w, env, lobes) in segmented.items():
            with open(plot_dir / f"frame_{fid}.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["t", "m", "envelope", "lobe"])
                writer.writerows(plot_rows(w, env, lobes))
            try:
                write_svg(plot_dir / f"frame_{fid}.svg", w, env, lobes)
            except ImportError:
                pass
    return out, rep.to_text()


def _cmd_selftest(cfg: RunConfig, timings, files):
    results = _timed(timings, "selftest", selftest.run, cfg.seed)
    out = {"seed": cfg.seed, "checks": [{"name": n, "pass": ok, "detail": d} for n, ok, d in results]}
    text = "".join(f"{'PASS' if ok else 'FAIL'} {n}: {d}\n" for n, ok, d in results)
    if not all(ok for _, ok, _ in results):
        out["failed"] = True
    return out, text


def _cmd_validate(cfg: RunConfig, timings, files):
    rep = validate_inputs(cfg.input_paths(), _tolerances(cfg))
    return rep.to_dict(), ("ok\n" if rep.ok else "".join(f"{f}\n" for f in rep.findings))


COMMANDS = {
    "distances": _cmd_distances,
    "topology": _cmd_topology,
    "dynamics": _cmd_dynamics,
    "energy": _cmd_energy,
    "selftest": _cmd_selftest,
    "validate": _cmd_validate,
}


def _tolerances(cfg: RunConfig) -> dict:
    return {"epsilon": cfg.epsilon, "tau_eq": cfg.tau_eq, "tau_conv": cfg.tau_conv,
            "cells": cfg.cells, "m_max": cfg.m_max, "n_max": cfg.n_max}


def run(cfg: RunConfig) -> RunManifest:
    """Validate, execute one command and write its outputs."""
    if cfg.command not in ("validate", "selftest"):
        findings = validate_inputs(cfg.input_paths(), _tolerances(cfg)).findings
        findings += [Finding("<config>", "radii", f"must be > 0, got {r!r}", "range")
                     for r in cfg.radii if not r > 0]
        if findings:
            raise ValidationError(findings)
    timings: dict[str, float] = {}
    files: dict[str, str] = {}
    start = time.perf_counter()
    outputs, text = COMMANDS[cfg.command](cfg, timings, files)
    timings["total"] = time.perf_counter() - start
    inputs = {p: sha256(p) for p in cfg.input_paths() if Path(p).is_file()}
    manifest = RunManifest(asdict(cfg), inputs, __version__, kernels.BACKEND, outputs, timings, text)
    if cfg.out:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            (out_dir / name).write_text(content)
        (out_dir / "report.json").write_text(json.dumps(outputs, indent=2, sort_keys=True) + "\n")
        (out_dir / "report.txt").write_text(text)
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", choices=["json", "text"], default="json")
    common.add_argument("--out", help="directory for report, CSV and manifest files")
    common.add_argument("--tau-eq", type=float, default=None,
                        help="description equality slack (default: 0 for integer probes, "
                             "1e-12 for real probes; 1e-9 for dynamics)")
    common.add_argument("--norm", choices=sorted(kernels.NORMS), default="euclidean")
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="descprox", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("distances", parents=[common], help="descriptive distance matrices")
    d.add_argument("inputs", nargs=1, metavar="SETS_JSON")
    d.add_argument("--tau-conv", type=float, default=TAU_CONV)

    t = sub.add_parser("topology", parents=[common], help="balls and open-set axiom checks")
    t.add_argument("inputs", nargs=1, metavar="SETS_JSON")
    t.add_argument("--radius", type=float, action="append", dest="radii", default=[])

    y = sub.add_parser("dynamics", parents=[common], help="periodicity and chaos witnesses")
    y.add_argument("inputs", nargs=1, metavar="SYSTEM_JSON")
    y.add_argument("--cells", type=int, default=None)
    y.add_argument("--m-max", type=int, default=8)
    y.add_argument("--n-max", type=int, default=10)

    e = sub.add_parser("energy", parents=[common], help="lobe energy dissipation report")
    e.add_argument("--epsilon", type=float, default=0.2)
    e.add_argument("--envelope-mode", choices=["analytic", "literal"], default="analytic")
    e.add_argument("--integrand", choices=["envelope", "squared", "abs"], default="envelope")
    e.add_argument("--frames", help="frame manifest JSON")
    e.add_argument("--lobe-table", help="frame,lobe,pos_area,neg_area CSV")
    e.add_argument("--expect", help="claimed verdicts JSON to check against")
    e.add_argument("--stated-epsilon", type=float, default=None)
    e.add_argument("--plot", help="directory for per-frame plot CSV/SVG")

    s = sub.add_parser("selftest", parents=[common], help="seeded randomized self-checks")
    s.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("validate", parents=[common], help="validate input files")
    v.add_argument("inputs", nargs="*")
    v.add_argument("--frames")
    v.add_argument("--lobe-table")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__})
    try:
        manifest = run(cfg)
    except ValidationError as exc:
        for f in exc.findings:
            print(f"error: {f}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DescproxError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if args.report == "text":
        sys.stdout.write(manifest.text)
    else:
        sys.stdout.write(json.dumps(manifest.outputs, indent=2, sort_keys=True) + "\n")
    if cfg.command == "validate" and not manifest.outputs["ok"]:
        return EXIT_VALIDATION
    if cfg.command == "selftest" and manifest.outputs.get("failed"):
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
