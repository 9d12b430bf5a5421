"""Command line entry point: ``progunfold unfold | decimate | metrics | bench``.

Exit codes of ``unfold``: 0 success, 1 approximative, 2 failed, 3 invalid
input or unreadable file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .decimate import QQ, STRATEGIES, CollapseStrategy, decimate_to
from .mesh import HalfEdgeMesh, MeshError, load_mesh, mesh_from_arrays, save_mesh
from .metrics import hausdorff_relative
from .pipeline import PipelineConfig, Status, UnfoldOutcome, direct_unfold, progressive_unfold
from .unfold import Layout2D, UnfoldTree

log = logging.getLogger("progunfold")

SCHEMA = 1
EXIT_CODES = {Status.SUCCESS: 0, Status.APPROXIMATIVE: 1, Status.FAILED: 2}
EXIT_INVALID = 3
MESH_SUFFIXES = (".obj", ".off", ".stl")


@dataclass
class RunConfig:
    """Everything that determines one ``unfold`` run."""

    strategy: str = "q/q"
    direct: bool = False
    target_faces: Optional[int] = None
    seed: int = 0
    budget_factor: float = 100.0
    step_budget_factor: float = 20.0
    allow_boundary: bool = False
    svg: Optional[Path] = None
    obj_out: Optional[Path] = None
    report: Optional[Path] = None
    scale: float = 10.0
    extra: dict = field(default_factory=dict)

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(budget_factor=self.budget_factor, step_budget_factor=self.step_budget_factor,
                              target_faces=self.target_faces, allow_boundary=self.allow_boundary)


def run(mesh: HalfEdgeMesh, cfg: RunConfig) -> UnfoldOutcome:
    if cfg.direct:
        return direct_unfold(mesh, cfg.pipeline(), cfg.seed)
    return progressive_unfold(mesh, CollapseStrategy.parse(cfg.strategy), cfg.pipeline(), cfg.seed)


# ---------------------------------------------------------------------------
# artifacts


def _fmt(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def layout_to_svg(tree: UnfoldTree, lay: Layout2D, scale: float = 10.0, margin: float = 5.0) -> str:
    """One polygon per face, cut edges solid and fold edges dashed.

    Coordinates are millimetres: ``X = (x - xmin) * scale + margin`` and
    ``Y = (ymax - y) * scale + margin``.
    """
    mesh, P = tree.mesh, lay.points
    faces = lay.faces.tolist()
    tri = P[lay.faces]
    lo, hi = tri.reshape(-1, 2).min(axis=0), tri.reshape(-1, 2).max(axis=0)
    width = (hi[0] - lo[0]) * scale + 2 * margin
    height = (hi[1] - lo[1]) * scale + 2 * margin

    def xy(p) -> tuple[str, str]:
        return _fmt((p[0] - lo[0]) * scale + margin), _fmt((hi[1] - p[1]) * scale + margin)

    hinges = {h for h in tree.hinge if h >= 0}
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}mm" height="{_fmt(height)}mm" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f"<desc>scale={_fmt(scale)} margin={_fmt(margin)} xmin={float(lo[0])!r} ymax={float(hi[1])!r} faces={len(faces)}</desc>",
        '<g id="faces" fill="#f4f1ea" stroke="none">',
    ]
    for f in faces:
        pts = " ".join(",".join(xy(p)) for p in P[f])
        lines.append(f'<polygon data-face="{f}" points="{pts}"/>')
    lines.append("</g>")
    cuts, folds = [], []
    for f in faces:
        for i in range(3):
            h = 3 * f + i
            t = int(mesh.twin[h])
            a, b = xy(P[f, i]), xy(P[f, (i + 1) % 3])
            seg = f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}"/>'
            if t >= 0 and (h in hinges or t in hinges):
                if h < t:
                    folds.append(seg)
            else:
                cuts.append(seg)
    lines.append('<g id="cut" stroke="#000000" stroke-width="0.2" fill="none">')
    lines += cuts
    lines.append("</g>")
    lines.append('<g id="fold" stroke="#555555" stroke-width="0.2" stroke-dasharray="1,1" fill="none">')
    lines += folds
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def outcome_report(outcome: UnfoldOutcome, cfg: RunConfig, source: str, timings: bool = True) -> dict:
    rep = {
        "schema": SCHEMA,
        "input": source,
        "variant": "direct" if cfg.direct else cfg.strategy,
        "seed": cfg.seed,
        "status": outcome.status.value,
        "faces": outcome.mesh.n_faces,
        "coarse_faces": outcome.coarse_faces,
        "remaining_uncollapses": outcome.remaining,
        "iterations": outcome.iterations,
    }
    m = outcome.metrics.to_dict(timings=timings)
    m.pop("status", None)
    m.pop("faces", None)
    if m.get("hausdorff") is None:
        m.pop("hausdorff", None)
    rep["metrics"] = m
    return rep


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def _load(path: str) -> HalfEdgeMesh:
    return load_mesh(path)


def cmd_unfold(args) -> int:
    cfg = RunConfig(strategy=args.strategy, direct=args.direct, target_faces=args.target_faces, seed=args.seed,
                    budget_factor=args.budget_factor, step_budget_factor=args.step_budget,
                    allow_boundary=args.allow_boundary, svg=args.svg, obj_out=args.obj_out, report=args.report,
                    scale=args.scale)
    try:
        mesh = _load(args.input)
        outcome = run(mesh, cfg)
    except (OSError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if outcome.layout is not None:
        svg_path = cfg.svg if cfg.svg is not None else Path(args.input).with_suffix(".svg")
        Path(svg_path).write_text(layout_to_svg(outcome.tree, outcome.layout, cfg.scale))
    if cfg.obj_out is not None:
        save_mesh(_compacted(outcome.mesh), cfg.obj_out, "obj")
    rep = outcome_report(outcome, cfg, Path(args.input).name, timings=not args.no_timings)
    text = dump_json(rep)
    if cfg.report is not None:
        Path(cfg.report).write_text(text)
    sys.stdout.write(text)
    return EXIT_CODES[outcome.status]


def _compacted(mesh: HalfEdgeMesh) -> HalfEdgeMesh:
    pos, faces = mesh.compact()
    return mesh_from_arrays(pos, faces)


def cmd_decimate(args) -> int:
    try:
        mesh = _load(args.input)
    except (OSError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    before = mesh.n_faces
    records = decimate_to(mesh, args.target_faces, CollapseStrategy.parse(args.strategy))
    save_mesh(_compacted(mesh), args.output)
    sys.stdout.write(dump_json({"schema": SCHEMA, "faces_before": before, "faces_after": mesh.n_faces,
                                "collapses": len(records), "strategy": args.strategy}))
    return 0


def cmd_metrics(args) -> int:
    try:
        a, b = _load(args.original), _load(args.approx)
    except (OSError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    h = hausdorff_relative(a, b, samples_per_area=args.density, seed=args.seed)
    sys.stdout.write(dump_json({"schema": SCHEMA, "hausdorff": h, "density": args.density}))
    return 0


# -- benchmark -----------------------------------------------------------------

VARIANTS = ("q/q", "se/mp", "se/q", "direct")


def _bench_task(task: tuple) -> dict:
    name, positions, faces, resolution, variant, seed, budget, step = task
    mesh = mesh_from_arrays(positions, faces)
    if mesh.n_faces > resolution:
        decimate_to(mesh, resolution, QQ)
        mesh = _compacted(mesh)
    cfg = RunConfig(strategy=variant if variant != "direct" else "q/q", direct=variant == "direct", seed=seed,
                    budget_factor=budget, step_budget_factor=step)
    row = {"mesh": name, "resolution": resolution, "faces": mesh.n_faces, "variant": variant, "seed": seed}
    t0 = time.perf_counter()
    try:
        out = run(mesh, cfg)
        row["status"] = out.status.value
        row["remaining_uncollapses"] = out.remaining
        row["hausdorff"] = out.metrics.hausdorff
    except MeshError as exc:
        row["status"] = "invalid"
        row["error"] = str(exc)
    row["time"] = time.perf_counter() - t0
    return row


def _aggregate(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["resolution"], r["variant"]), []).append(r)
    out = []
    for (res, variant), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], VARIANTS.index(kv[0][1]))):
        times = [r["time"] for r in rs]
        ok = sum(r["status"] == "success" for r in rs)
        approx = ok + sum(r["status"] == "approximative" for r in rs)
        out.append({"resolution": res, "variant": variant, "runs": len(rs),
                    "success_rate": 100.0 * ok / len(rs), "success_rate_with_approx": 100.0 * approx / len(rs),
                    "time_median": statistics.median(times), "time_mean": statistics.fmean(times)})
    return out


def bench(corpus: Path, resolutions: Sequence[int], seed: int = 0, jobs: int = 1,
          budget_factor: float = 100.0, step_budget_factor: float = 20.0) -> dict:
    files = sorted(p for p in Path(corpus).iterdir() if p.suffix.lower() in MESH_SUFFIXES) if Path(corpus).is_dir() else []
    tasks = []
    rows_bad = []
    for mi, path in enumerate(files):
        try:
            mesh = load_mesh(path)
        except (OSError, MeshError) as exc:
            for res in resolutions:
                for variant in VARIANTS:
                    rows_bad.append({"mesh": path.name, "resolution": res, "faces": 0, "variant": variant,
                                     "seed": seed, "status": "invalid", "error": str(exc), "time": 0.0})
            continue
        pos, faces = mesh.compact()
        for ri, res in enumerate(resolutions):
            run_seed = int(np.random.SeedSequence([seed, mi, ri]).generate_state(1, np.uint64)[0] >> np.uint64(1))
            for variant in VARIANTS:
                tasks.append((path.name, pos, faces, res, variant, run_seed, budget_factor, step_budget_factor))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_task, tasks))
    else:
        rows = [_bench_task(t) for t in tasks]
    rows += rows_bad
    rows.sort(key=lambda r: (r["mesh"], r["resolution"], VARIANTS.index(r["variant"])))
    return {"schema": SCHEMA, "seed": seed, "resolutions": list(resolutions), "rows": rows,
            "summary": _aggregate(rows)}


TIMING_FIELDS = ("time", "time_median", "time_mean", "wall_time")


def strip_timings(obj):
    """Copy of a report with all timing fields removed."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def rows_to_csv(rows: list[dict]) -> str:
    cols = ["mesh", "resolution", "faces", "variant", "seed", "status", "remaining_uncollapses", "hausdorff", "time"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def cmd_bench(args) -> int:
    res = [int(x) for x in args.resolutions.split(",") if x.strip()]
    report = bench(Path(args.corpus), res, seed=args.seed, jobs=args.jobs,
                   budget_factor=args.budget_factor, step_budget_factor=args.step_budget)
    if args.no_timings:
        report = strip_timings(report)
    text = dump_json(report)
    if args.report is not None:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv is not None:
        Path(args.csv).write_text(rows_to_csv(report["rows"]))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _strategy(text: str) -> str:
    if text.lower() not in STRATEGIES:
        raise argparse.ArgumentTypeError(f"choose one of {', '.join(sorted(STRATEGIES))}")
    return text.lower()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="progunfold", description="Progressive mesh unfolding.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    u = sub.add_parser("unfold", help="unfold a closed triangle mesh into an overlap-free net")
    u.add_argument("input")
    u.add_argument("--strategy", type=_strategy, default="q/q", help="q/q, se/mp or se/q (default q/q)")
    u.add_argument("--direct", action="store_true", help="tabu search on the full mesh, no decimation")
    u.add_argument("--target-faces", type=int, default=None, help="override the coarse face count")
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--budget-factor", type=float, default=100.0, help="initial tabu iterations per face")
    u.add_argument("--step-budget", type=float, default=20.0, help="tabu iterations per face per refinement step")
    u.add_argument("--svg", type=Path, default=None, help="net drawing (default: input with .svg suffix)")
    u.add_argument("--scale", type=float, default=10.0, help="millimetres per model unit in the SVG")
    u.add_argument("--obj-out", type=Path, default=None, help="write the final mesh as OBJ")
    u.add_argument("--report", type=Path, default=None, help="write the JSON report here as well")
    u.add_argument("--allow-boundary", action="store_true")
    u.add_argument("--no-timings", action="store_true", help="omit wall time from the report")
    u.set_defaults(func=cmd_unfold)

    d = sub.add_parser("decimate", help="simplify a mesh by edge collapses")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--target-faces", type=int, required=True)
    d.add_argument("--strategy", type=_strategy, default="q/q")
    d.set_defaults(func=cmd_decimate)

    m = sub.add_parser("metrics", help="relative Hausdorff distance between two meshes")
    m.add_argument("original")
    m.add_argument("approx")
    m.add_argument("--density", type=float, default=10.0, help="samples per average triangle area")
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_metrics)

    b = sub.add_parser("bench", help="run all variants over a corpus at several resolutions")
    b.add_argument("corpus")
    b.add_argument("--resolutions", default="100,200", help="comma separated face counts")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--budget-factor", type=float, default=100.0)
    b.add_argument("--step-budget", type=float, default=20.0)
    b.add_argument("--report", type=Path, default=None, help="JSON output (default stdout)")
    b.add_argument("--csv", type=Path, default=None)
    b.add_argument("--no-timings", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
