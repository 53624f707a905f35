"""Non-singular assembly-mode-changing path planning on a CS mesh.

Paths are searched on the mesh vertex graph (edges from faces) with a
weighted Euclidean cost in (rho2, rho3, theta1), excluding vertices closer
to the singular boundary than the requested margin.  The endpoints are the
exact assembly modes, inserted as virtual graph nodes.  Every returned path
is re-traced by the motion engine, which is the validity criterion.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .csmesh import SHEET_JUMP, CsMesh
from .cusps import CuspPoint, find_cusps
from .dk import SolutionSet, newton_polish, solve_dk
from .errors import NoPathError, ValidationFailedError
from .geometry import (
    Aspect,
    Geometry,
    JointVector,
    Pose,
    ang_dist,
    singularity_value,
)
from .motion import JointTrajectory, Outcome, enclosed_cusps, trace

DEFAULT_MARGIN = 0.02  # on |S|/scale
DEFAULT_WEIGHTS = (1.0, 1.0, 5.0)


@dataclass(frozen=True)
class PlanRequest:
    """Connect two same-aspect assembly modes at one joint vector."""

    joint: JointVector
    from_mode: int
    to_mode: int
    margin: float = DEFAULT_MARGIN
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS


@dataclass(frozen=True)
class PlannedPath:
    request: PlanRequest
    cs_polyline: np.ndarray  # (n, 3): rho2, rho3, theta1
    joint_projection: JointTrajectory | None  # closed; None for zero-length plans
    enclosed: tuple[tuple[CuspPoint, int], ...]
    validated: bool
    min_margin: float


class MeshGraph:
    """Adjacency of a CsMesh plus vertex lookup helpers, reusable across plans."""

    def __init__(self, mesh: CsMesh):
        self.mesh = mesh
        self.adj: dict[int, set[int]] = {}
        for a, b, c in mesh.faces:
            for u, v in ((a, b), (b, c), (a, c)):
                self.adj.setdefault(int(u), set()).add(int(v))
                self.adj.setdefault(int(v), set()).add(int(u))

    def nearby_vertices(self, rho2: float, rho3: float, theta1: float, k: int = 6):
        """Up to k nearest same-sheet mesh vertices around a CS point."""
        mesh = self.mesh
        r2ax, r3ax = mesh.grid_axes
        h2 = r2ax[1] - r2ax[0]
        h3 = r3ax[1] - r3ax[0]
        i0 = int(round((rho2 - r2ax[0]) / h2))
        j0 = int(round((rho3 - r3ax[0]) / h3))
        cand = []
        for i in range(max(0, i0 - 2), min(mesh.grid_n, i0 + 3)):
            for j in range(max(0, j0 - 2), min(mesh.grid_n, j0 + 3)):
                for vidx in mesh.node_vertices[i][j]:
                    th = mesh.vertices[vidx, 2]
                    if ang_dist(th, theta1) <= SHEET_JUMP:
                        cand.append(vidx)
        cand.sort(
            key=lambda v: math.hypot(
                mesh.vertices[v, 0] - rho2, mesh.vertices[v, 1] - rho3
            )
            + ang_dist(mesh.vertices[v, 2], theta1)
        )
        return cand[:k]


def _metric(weights, p, q) -> float:
    return math.sqrt(
        (weights[0] * (p[0] - q[0])) ** 2
        + (weights[1] * (p[1] - q[1])) ** 2
        + (weights[2] * ang_dist(p[2], q[2])) ** 2
    )


def plan(
    g: Geometry,
    m: CsMesh,
    req: PlanRequest,
    graph: MeshGraph | None = None,
    cusps: list[CuspPoint] | None = None,
    shortcut: bool = False,
) -> PlannedPath:
    """Shortest valid mode-changing path on the mesh, continuation-validated.

    With shortcut=True a greedy pass tries to skip interior vertices,
    keeping only skips whose re-trace still reaches the target mode.
    """
    solset = solve_dk(g, req.joint)
    n = len(solset)
    if not (0 <= req.from_mode < n and 0 <= req.to_mode < n):
        raise ValueError(f"mode indices must be in [0, {n})")
    from_pose, from_aspect = solset.solutions[req.from_mode]
    to_pose, to_aspect = solset.solutions[req.to_mode]
    if from_aspect != to_aspect or from_aspect == Aspect.SINGULAR:
        raise ValueError("both modes must share one non-singular aspect")
    if from_aspect != m.aspect:
        raise ValueError(f"modes lie in {from_aspect.name}, mesh holds {m.aspect.name}")

    if req.from_mode == req.to_mode:
        point = np.array([[req.joint.rho2, req.joint.rho3, from_pose.theta1]])
        s_here = abs(singularity_value(g, from_pose)) / g.scale
        return PlannedPath(
            request=req,
            cs_polyline=point,
            joint_projection=None,
            enclosed=(),
            validated=True,
            min_margin=s_here,
        )

    if graph is None:
        graph = MeshGraph(m)
    verts = m.vertices
    margin_ok = (np.abs(verts[:, 4]) / g.scale) >= req.margin

    start_pt = (req.joint.rho2, req.joint.rho3, from_pose.theta1)
    goal_pt = (req.joint.rho2, req.joint.rho3, to_pose.theta1)
    start_links = [v for v in graph.nearby_vertices(*start_pt) if margin_ok[v]]
    goal_links = [v for v in graph.nearby_vertices(*goal_pt) if margin_ok[v]]
    if not start_links or not goal_links:
        raise NoPathError("no mesh vertices near a requested mode at this margin")

    START, GOAL = -1, -2

    def coords(v):
        if v == START:
            return start_pt
        if v == GOAL:
            return goal_pt
        return verts[v, 0], verts[v, 1], verts[v, 2]

    def neighbors(v):
        if v == START:
            return start_links
        if v == GOAL:
            return goal_links
        out = [u for u in graph.adj.get(v, ()) if margin_ok[u]]
        if v in goal_set:
            out = out + [GOAL]
        return out

    goal_set = set(goal_links)
    w = req.weights
    dist = {START: 0.0}
    prev: dict[int, int] = {}
    heap = [(_metric(w, start_pt, goal_pt), 0, START)]
    tie = 1
    found = False
    while heap:
        f, _, v = heapq.heappop(heap)
        if v == GOAL:
            found = True
            break
        dv = dist[v]
        if f - _metric(w, coords(v), goal_pt) > dv + 1e-12:
            continue
        for u in neighbors(v):
            du = dv + _metric(w, coords(v), coords(u))
            if du < dist.get(u, math.inf) - 1e-15:
                dist[u] = du
                prev[u] = v
                heapq.heappush(heap, (du + _metric(w, coords(u), goal_pt), tie, u))
                tie += 1
    if not found:
        raise NoPathError(
            f"modes {req.from_mode} and {req.to_mode} are disconnected at margin {req.margin}"
        )

    chain = [GOAL]
    while chain[-1] != START:
        chain.append(prev[chain[-1]])
    chain.reverse()
    cs_polyline = np.array([coords(v) for v in chain], dtype=float)

    def validate(polyline: np.ndarray):
        """Joint projection plus the continuation re-trace along it."""
        shadow = [polyline[0, :2]]
        for p in polyline[1:, :2]:
            if np.linalg.norm(p - shadow[-1]) > 1e-12:
                shadow.append(p)
        if np.linalg.norm(shadow[-1] - shadow[0]) < 1e-12 and len(shadow) > 1:
            shadow.pop()
        projection = JointTrajectory(
            rho1=req.joint.rho1, waypoints=np.array(shadow), closed=True
        )
        result = trace(
            g,
            projection,
            from_pose,
            start_set=solset,
            cross_check=False,
            max_step=0.02,
        )
        if result.outcome not in (Outcome.MODE_CHANGE, Outcome.LOOP_SAME_MODE):
            return projection, result, False
        return projection, result, result.end_mode_index == req.to_mode

    if shortcut:
        changed = True
        while changed and len(cs_polyline) > 3:
            changed = False
            k = 1
            while k < len(cs_polyline) - 1:
                trial = np.vstack([cs_polyline[:k], cs_polyline[k + 1 :]])
                try:
                    _, _, ok = validate(trial)
                except Exception:
                    ok = False
                if ok:
                    cs_polyline = trial
                    changed = True
                else:
                    k += 1

    joint_projection, result, ok = validate(cs_polyline)
    if not ok:
        if result.outcome not in (Outcome.MODE_CHANGE, Outcome.LOOP_SAME_MODE):
            raise ValidationFailedError(f"re-trace ended with {result.outcome.value}")
        raise ValidationFailedError(
            f"re-trace arrived at mode {result.end_mode_index}, wanted {req.to_mode}"
        )
    min_margin = float(np.min(np.abs(result.samples[:, 5]))) / g.scale

    if cusps is None:
        cusps = find_cusps(g, req.joint.rho1)
    enclosed = tuple(enclosed_cusps(joint_projection, cusps))
    return PlannedPath(
        request=req,
        cs_polyline=cs_polyline,
        joint_projection=joint_projection,
        enclosed=enclosed,
        validated=True,
        min_margin=min_margin,
    )


def min_singularity_margin(
    g: Geometry, path: PlannedPath, samples_per_seg: int = 8
) -> float:
    """Minimum |S|/scale along the path, poses rebuilt by dense continuation."""
    if path.joint_projection is None:
        return path.min_margin
    if not path.validated:
        raise ValueError("margin is only defined for validated paths")
    solset = solve_dk(g, path.request.joint)
    from_pose, _ = solset.solutions[path.request.from_mode]
    n_seg = max(1, len(path.joint_projection.waypoints))
    result = trace(
        g,
        path.joint_projection,
        from_pose,
        start_set=solset,
        cross_check=False,
        max_step=1.0 / (n_seg * samples_per_seg),
    )
    return float(np.min(np.abs(result.samples[:, 5]))) / g.scale


def mode_index_by_layer(
    g: Geometry, solset: SolutionSet, aspect: Aspect, layer: int
) -> int:
    """Index (into the solution set) of the layer-th same-aspect mode by theta1."""
    members = [
        (p.theta1, k)
        for k, (p, a) in enumerate(solset.solutions)
        if a == aspect
    ]
    members.sort()
    if not (1 <= layer <= len(members)):
        raise ValueError(f"layer {layer} out of range (1..{len(members)})")
    return members[layer - 1][1]
