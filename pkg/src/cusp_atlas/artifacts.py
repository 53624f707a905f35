"""Artifact documents shared by the CLI and the HTTP service.

Every artifact is a plain dict rendered through the canonical JSON writer;
the CLI writes the bytes to files, the service returns the same bytes as
response bodies, which is what makes the two surfaces byte-identical.
"""

from __future__ import annotations

import io

import numpy as np

from .atlas import (
    JointSliceCurve,
    WorkspaceContour,
    joint_slice_curves,
    workspace_singular_contour,
)
from .csmesh import build_cs, export_mesh, extract_layers
from .cusps import CuspPoint, find_cusps
from .dk import SolutionSet, solve_dk
from .geometry import Aspect, Geometry, JointVector, Pose, inverse_kinematics
from .jsonio import dumps
from .motion import JointTrajectory, TraceResult, classify_loop, trace
from .planner import PlanRequest, PlannedPath, plan


def geometry_artifact(g: Geometry) -> dict:
    doc = {"schema": "cusp-atlas/geometry/v1"}
    doc.update(g.to_dict())
    doc["beta"] = g.beta
    return doc


def _pose_doc(p: Pose) -> dict:
    return {"rho1": p.rho1, "theta1": p.theta1, "alpha": p.alpha}


def dk_artifact(g: Geometry, q: JointVector, solset: SolutionSet | None = None) -> dict:
    ss = solset if solset is not None else solve_dk(g, q)
    return {
        "schema": "cusp-atlas/dk/v1",
        "joint": [q.rho1, q.rho2, q.rho3],
        "count": len(ss),
        "residual": ss.residual,
        "near_discriminant": ss.near_discriminant,
        "solutions": [
            {"pose": _pose_doc(p), "aspect": int(a)} for p, a in ss.solutions
        ],
    }


def ik_artifact(g: Geometry, pose: Pose) -> dict:
    q = inverse_kinematics(g, pose)
    return {
        "schema": "cusp-atlas/ik/v1",
        "pose": _pose_doc(pose),
        "joint": [q.rho1, q.rho2, q.rho3],
    }


def singular_curves_artifact(
    g: Geometry,
    rho1: float,
    grid_n: int,
    contour: WorkspaceContour | None = None,
) -> dict:
    wc = contour if contour is not None else workspace_singular_contour(g, rho1, grid_n)
    jc = joint_slice_curves(g, wc)
    return {
        "schema": "cusp-atlas/singular-curves/v1",
        "rho1": rho1,
        "grid_n": grid_n,
        "workspace": [
            {"closed": pl.closed, "vertices": pl.vertices}
            for pl in wc.polylines
        ],
        "joint": [
            {"closed": pl.closed, "vertices": pl.vertices}
            for pl in jc.polylines
        ],
        "dropped_vertices": jc.dropped_vertices,
    }


def curves_workspace_csv(wc: WorkspaceContour) -> bytes:
    buf = io.StringIO()
    buf.write("polyline_id,alpha,theta1\n")
    for pid, pl in enumerate(wc.polylines):
        for alpha, theta1 in pl.vertices:
            buf.write(f"{pid},{alpha!r},{theta1!r}\n")
    return buf.getvalue().encode("utf-8")


def curves_joint_csv(jc: JointSliceCurve) -> bytes:
    buf = io.StringIO()
    buf.write("polyline_id,rho2,rho3\n")
    for pid, pl in enumerate(jc.polylines):
        for rho2, rho3 in pl.vertices:
            buf.write(f"{pid},{rho2!r},{rho3!r}\n")
    return buf.getvalue().encode("utf-8")


def cusp_doc(c: CuspPoint) -> dict:
    return {
        "rho1": c.rho1,
        "rho2": c.rho2,
        "rho3": c.rho3,
        "theta1": c.theta1,
        "t": c.t_triple,
        "residuals": list(c.residuals),
        "third_derivative": c.third_derivative,
        "degenerate": c.degenerate,
    }


def cusps_artifact(
    g: Geometry, rho1: float, cusps: list[CuspPoint] | None = None
) -> dict:
    found = cusps if cusps is not None else find_cusps(g, rho1)
    return {
        "schema": "cusp-atlas/cusps/v1",
        "rho1": rho1,
        "count": len(found),
        "cusps": [cusp_doc(c) for c in found],
    }


def mesh_artifact_bytes(
    g: Geometry,
    rho1: float,
    aspect: Aspect,
    window,
    grid_n: int,
    fmt: str = "json",
    progress=None,
) -> bytes:
    m1, m2 = build_cs(g, rho1, window, grid_n, progress=progress)
    m = m1 if aspect == Aspect.ASPECT_1 else m2
    return export_mesh(extract_layers(m), fmt)


def trace_artifact(
    g: Geometry,
    traj: JointTrajectory,
    start_mode: int | None = None,
    cadence: int = 1,
    start_pose: Pose | None = None,
) -> dict:
    solset = solve_dk(g, traj.joint_at(0.0))
    if start_pose is None:
        if start_mode is None or not (0 <= start_mode < len(solset)):
            raise ValueError(f"start_mode must be in [0, {len(solset)})")
        start_pose = solset.solutions[start_mode][0]
    result = trace(g, traj, start_pose, start_set=solset)
    return trace_result_doc(result, traj, result.start_mode_index, cadence)


def trace_result_doc(
    result: TraceResult, traj: JointTrajectory, start_mode: int, cadence: int = 1
) -> dict:
    samples = result.samples[:: max(1, cadence)]
    if len(result.samples) and not np.array_equal(samples[-1], result.samples[-1]):
        samples = np.vstack([samples, result.samples[-1]])
    return {
        "schema": "cusp-atlas/trace/v1",
        "trajectory": traj.to_dict(),
        "start_mode": start_mode,
        "outcome": result.outcome.value,
        "end_mode": result.end_mode_index,
        "stop_pose": None if result.stop_pose is None else _pose_doc(result.stop_pose),
        "samples": samples,
    }


def classify_artifact(g: Geometry, traj: JointTrajectory, cls=None) -> dict:
    if cls is None:
        cls = classify_loop(g, traj)
    return {
        "schema": "cusp-atlas/classify-loop/v1",
        "trajectory": traj.to_dict(),
        "start": dk_artifact(g, traj.joint_at(0.0), cls.start_set),
        "outcome_counts": dict(sorted(cls.outcome_counts().items())),
        "runs": [
            {
                "start_index": r.start_index,
                "direction": r.direction,
                "outcome": r.outcome.value,
                "end_mode_index": r.end_mode_index,
            }
            for r in cls.runs
        ],
        "crossings": list(cls.crossings),
    }


def plan_artifact(
    g: Geometry,
    mesh,
    req: PlanRequest,
    graph=None,
    cusps: list[CuspPoint] | None = None,
    planned: PlannedPath | None = None,
) -> dict:
    p = planned if planned is not None else plan(g, mesh, req, graph=graph, cusps=cusps)
    return {
        "schema": "cusp-atlas/plan/v1",
        "request": {
            "joint": [req.joint.rho1, req.joint.rho2, req.joint.rho3],
            "from_mode": req.from_mode,
            "to_mode": req.to_mode,
            "margin": req.margin,
            "weights": list(req.weights),
        },
        "validated": p.validated,
        "min_margin": p.min_margin,
        "cs_polyline": p.cs_polyline,
        "joint_projection": None
        if p.joint_projection is None
        else p.joint_projection.to_dict(),
        "enclosed_cusps": [
            {"cusp": cusp_doc(c), "winding": w} for c, w in p.enclosed
        ],
    }


def to_bytes(doc: dict) -> bytes:
    return dumps(doc).encode("utf-8") + b"\n"
