"""Command-line interface and the reproduction pipeline."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import artifacts, plots
from .atlas import joint_slice_curves, workspace_singular_contour
from .cache import ArtifactCache
from .config import ProjectConfig
from .csmesh import build_cs, export_mesh, extract_layers, mesh_from_json
from .cusps import find_cusps
from .dk import solve_dk
from .errors import CuspAtlasError
from .fixture import aspect1_mode_chain, reference_triangle
from .geometry import Aspect, Geometry, JointVector, Pose
from .jsonio import dumps
from .motion import JointTrajectory, trace
from .planner import DEFAULT_MARGIN, DEFAULT_WEIGHTS, MeshGraph, PlanRequest, plan


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)  # type: ignore[return-value]


def _parse_window(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected r2lo,r2hi,r3lo,r3hi")
    return ((parts[0], parts[1]), (parts[2], parts[3]))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cusp-atlas",
        description="Singularity and configuration-space analysis of planar "
        "3-RPR parallel manipulators",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="project config JSON")
    common.add_argument("--geometry", help="geometry JSON (overrides config)")
    common.add_argument("--out-dir", help="artifact output directory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add_parser("dk", help="direct kinematics at a joint vector")
    s.add_argument("--q", type=_parse_triple, required=True, metavar="R1,R2,R3")
    s.set_defaults(func=cmd_dk)

    s = add_parser("ik", help="inverse kinematics of a pose")
    s.add_argument("--pose", type=_parse_triple, required=True, metavar="R1,TH1,AL")
    s.set_defaults(func=cmd_ik)

    s = add_parser("singular-curves", help="workspace and joint singular curves")
    s.add_argument("--rho1", type=float, required=True)
    s.add_argument("--grid-n", type=int, default=None)
    s.add_argument("--svg", action="store_true", help="also emit SVG plots")
    s.set_defaults(func=cmd_singular_curves)

    s = add_parser("cusps", help="cusp points of a slice")
    s.add_argument("--rho1", type=float, required=True)
    s.set_defaults(func=cmd_cusps)

    s = add_parser("cs-mesh", help="configuration-space surface mesh")
    s.add_argument("--rho1", type=float, required=True)
    s.add_argument("--aspect", type=int, choices=(1, 2), required=True)
    s.add_argument("--grid-n", type=int, default=None)
    s.add_argument("--window", type=_parse_window, default=None)
    s.add_argument("--format", choices=("json", "obj"), default="json")
    s.set_defaults(func=cmd_cs_mesh)

    s = add_parser("trace", help="continue a mode along a trajectory")
    s.add_argument("--trajectory", required=True, help="trajectory JSON file")
    s.add_argument("--start-mode", type=int, required=True)
    s.add_argument("--cadence", type=int, default=1)
    s.set_defaults(func=cmd_trace)

    s = add_parser("classify-loop", help="12-motion taxonomy of a closed loop")
    s.add_argument("--trajectory", required=True)
    s.set_defaults(func=cmd_classify)

    s = add_parser("plan", help="plan a mode-changing path")
    s.add_argument("--q", type=_parse_triple, required=True)
    s.add_argument("--from-mode", type=int, required=True)
    s.add_argument("--to-mode", type=int, required=True)
    s.add_argument("--margin", type=float, default=None)
    s.add_argument("--weights", type=_parse_triple, default=None)
    s.add_argument("--grid-n", type=int, default=None)
    s.set_defaults(func=cmd_plan)

    s = add_parser("serve", help="run the local HTTP JSON service")
    s.add_argument("--port", type=int, default=None)
    s.add_argument("--host", default=None)
    s.set_defaults(func=cmd_serve)

    s = add_parser("repro", help="regenerate all paper-figure analogues")
    s.set_defaults(func=cmd_repro)
    return p


def _context(args) -> tuple[ProjectConfig, Geometry, Path]:
    cfg = ProjectConfig.from_file(args.config) if args.config else ProjectConfig()
    if args.geometry:
        cfg = ProjectConfig(**{**cfg.__dict__, "geometry_path": args.geometry})
    out_dir = Path(args.out_dir or cfg.output_dir)
    return cfg, cfg.geometry(), out_dir


def _emit(doc: dict, out_dir: Path, name: str, echo: bool = True) -> bytes:
    data = artifacts.to_bytes(doc)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_bytes(data)
    if echo:
        sys.stdout.write(data.decode("utf-8"))
    return data


def cmd_dk(args) -> int:
    cfg, g, out = _context(args)
    q = JointVector(*args.q)
    _emit(artifacts.dk_artifact(g, q), out, f"dk-{_slug(args.q)}.json")
    return 0


def cmd_ik(args) -> int:
    cfg, g, out = _context(args)
    pose = Pose(*args.pose)
    _emit(artifacts.ik_artifact(g, pose), out, f"ik-{_slug(args.pose)}.json")
    return 0


def _slug(values) -> str:
    return "_".join(f"{v:g}" for v in values).replace(".", "p").replace("-", "m")


def cmd_singular_curves(args) -> int:
    cfg, g, out = _context(args)
    grid_n = args.grid_n or cfg.contour_grid_n
    wc = workspace_singular_contour(g, args.rho1, grid_n)
    jc = joint_slice_curves(g, wc)
    doc = artifacts.singular_curves_artifact(g, args.rho1, grid_n, contour=wc)
    base = f"singular-curves-rho1_{args.rho1:g}-n{grid_n}".replace(".", "p")
    _emit(doc, out, f"{base}.json", echo=False)
    out.joinpath(f"{base}-workspace.csv").write_bytes(artifacts.curves_workspace_csv(wc))
    out.joinpath(f"{base}-joint.csv").write_bytes(artifacts.curves_joint_csv(jc))
    if args.svg:
        plots.workspace_contour_svg(wc, out / f"{base}-workspace.svg")
        plots.joint_slice_svg(jc, out / f"{base}-joint.svg")
    sys.stdout.write(dumps({"written": f"{base}.json", "polylines": len(wc.polylines)}) + "\n")
    return 0


def cmd_cusps(args) -> int:
    cfg, g, out = _context(args)
    doc = artifacts.cusps_artifact(g, args.rho1)
    _emit(doc, out, f"cusps-rho1_{args.rho1:g}.json".replace(".", "p"))
    return 0


def cmd_cs_mesh(args) -> int:
    cfg, g, out = _context(args)
    grid_n = args.grid_n or cfg.mesh_grid_n
    window = args.window or cfg.window
    cache = ArtifactCache(cfg.resolved_cache_dir())
    aspect = Aspect(args.aspect)
    key = cache.key(
        g,
        "cs-mesh",
        {
            "rho1": args.rho1,
            "aspect": int(aspect),
            "window": [list(window[0]), list(window[1])],
            "grid_n": grid_n,
            "format": args.format,
        },
    )
    suffix = args.format

    def build() -> bytes:
        return artifacts.mesh_artifact_bytes(g, args.rho1, aspect, window, grid_n, args.format)

    data = cache.get_or_build(key, suffix, build)
    out.mkdir(parents=True, exist_ok=True)
    name = f"cs-mesh-rho1_{args.rho1:g}-a{int(aspect)}-n{grid_n}.{suffix}"
    (out / name).write_bytes(data)
    sys.stdout.write(dumps({"written": name, "bytes": len(data), "cache_key": key}) + "\n")
    return 0


def _load_trajectory(path: str) -> JointTrajectory:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        return JointTrajectory.from_dict(json.load(fh))


def cmd_trace(args) -> int:
    cfg, g, out = _context(args)
    traj = _load_trajectory(args.trajectory)
    doc = artifacts.trace_artifact(g, traj, args.start_mode, cadence=args.cadence)
    _emit(doc, out, f"trace-mode{args.start_mode}.json")
    return 0


def cmd_classify(args) -> int:
    cfg, g, out = _context(args)
    traj = _load_trajectory(args.trajectory)
    doc = artifacts.classify_artifact(g, traj)
    _emit(doc, out, "classify-loop.json")
    return 0


def cmd_plan(args) -> int:
    cfg, g, out = _context(args)
    q = JointVector(*args.q)
    grid_n = args.grid_n or cfg.mesh_grid_n
    solset = solve_dk(g, q)
    if not (0 <= args.from_mode < len(solset)):
        raise CuspAtlasError(f"from-mode out of range (0..{len(solset) - 1})")
    aspect = solset.solutions[args.from_mode][1]
    m1, m2 = build_cs(g, q.rho1, cfg.window, grid_n)
    mesh = extract_layers(m1 if aspect == Aspect.ASPECT_1 else m2)
    req = PlanRequest(
        joint=q,
        from_mode=args.from_mode,
        to_mode=args.to_mode,
        margin=args.margin if args.margin is not None else DEFAULT_MARGIN,
        weights=args.weights or DEFAULT_WEIGHTS,
    )
    doc = artifacts.plan_artifact(g, mesh, req)
    _emit(doc, out, f"plan-{args.from_mode}to{args.to_mode}.json")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    cfg, g, out = _context(args)
    from .service import create_app

    app = create_app(cfg)
    uvicorn.run(app, host=args.host or cfg.host, port=args.port or cfg.port)
    return 0


def cmd_repro(args) -> int:
    cfg, g, out = _context(args)
    run_repro(cfg, g, out)
    return 0


def run_repro(cfg: ProjectConfig, g: Geometry, out: Path) -> dict:
    """Regenerate every checkable figure analogue into `out` (deterministic)."""
    out.mkdir(parents=True, exist_ok=True)
    rho1 = cfg.default_rho1
    files: dict[str, bytes] = {}

    wc = workspace_singular_contour(g, rho1, cfg.contour_grid_n)
    jc = joint_slice_curves(g, wc)
    files["fig3a-workspace.csv"] = artifacts.curves_workspace_csv(wc)
    files["fig3b-joint.csv"] = artifacts.curves_joint_csv(jc)
    plots.workspace_contour_svg(wc, out / "fig3a.svg")

    cusps = find_cusps(g, rho1, contour=wc)
    files["fig3b-cusps.json"] = artifacts.to_bytes(artifacts.cusps_artifact(g, rho1, cusps))
    plots.joint_slice_svg(jc, out / "fig3b.svg", cusps=cusps)

    ref = reference_triangle(g, cusps)
    files["fig4-loop.json"] = artifacts.to_bytes(
        artifacts.classify_artifact(g, ref.trajectory, cls=ref.classification)
    )
    # workspace image of the two full-loop motions (mode change + same-mode loop)
    traces = []
    solset = ref.classification.start_set
    for run in ref.classification.runs:
        if run.outcome.value in ("MODE_CHANGE", "LOOP_SAME_MODE") and run.direction == 1:
            tr = trace(
                g,
                ref.trajectory,
                solset.solutions[run.start_index][0],
                start_set=solset,
                cross_check=False,
            )
            traces.append((f"mode {run.start_index}: {run.outcome.value}", tr.samples))
    plots.workspace_contour_svg(wc, out / "fig4b.svg", traces=traces)
    plots.joint_slice_svg(
        jc,
        out / "fig4a.svg",
        cusps=cusps,
        loops=[("T", ref.trajectory.waypoints.tolist())],
    )

    m1, m2 = build_cs(g, rho1, cfg.window, cfg.mesh_grid_n)
    m1, m2 = extract_layers(m1), extract_layers(m2)
    files["fig5-cs1.json"] = export_mesh(m1, "json")
    files["fig5-cs2.json"] = export_mesh(m2, "json")
    files["fig5-cs1.obj"] = export_mesh(m1, "obj")
    files["fig5-cs2.obj"] = export_mesh(m2, "obj")
    q = JointVector(rho1, 19.0, 17.0)
    ss = solve_dk(g, q)
    modes1 = [
        (f"mode {k}", (q.rho2, q.rho3, p.theta1))
        for k, (p, a) in enumerate(ss.solutions)
        if a == Aspect.ASPECT_1
    ]
    plots.cs_mesh_svg(m1, out / "fig5a.svg", modes=modes1)
    plots.cs_mesh_svg(m2, out / "fig5b.svg")

    end1, middle, end2, _links = aspect1_mode_chain(g, cusps)
    graph = MeshGraph(m1)
    for name, (a, b) in (
        ("fig6", (end1, middle)),
        ("fig7", (middle, end2)),
        ("fig8", (end1, end2)),
    ):
        req = PlanRequest(joint=q, from_mode=a, to_mode=b)
        planned = plan(g, m1, req, graph=graph, cusps=cusps)
        files[f"{name}-plan.json"] = artifacts.to_bytes(
            artifacts.plan_artifact(g, m1, req, planned=planned)
        )
        plots.plan_svg(m1, planned, jc, cusps, out / f"{name}.svg")

    for name, data in files.items():
        (out / name).write_bytes(data)
    import hashlib

    manifest = {
        "schema": "cusp-atlas/repro/v1",
        "geometry": g.to_dict(),
        "rho1": rho1,
        "files": {
            name: hashlib.sha256(data).hexdigest() for name, data in sorted(files.items())
        },
    }
    (out / "manifest.json").write_bytes(artifacts.to_bytes(manifest))
    sys.stdout.write(dumps({"written": len(files) + 1, "out_dir": str(out)}) + "\n")
    return manifest


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except CuspAtlasError as exc:
        sys.stdout.write(
            dumps({"error": exc.code, "detail": str(exc)}) + "\n"
        )
        return 2
    except (ValueError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
