"""Per-aspect configuration-space surfaces over a (rho2, rho3) window.

The slice is scanned on a grid; every direct-kinematics solution becomes a
mesh vertex of its aspect with theta1 as the surface coordinate.  Sheets are
stitched between adjacent nodes by mutual nearest-theta1 matching, faces
triangulate the stitched quads, and sheet ends (folds) are localized by
bisection along grid edges and chained into boundary polylines.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dk import DEDUP_TOL, newton_polish, solve_dk
from .errors import DegenerateCoordinateError
from .geometry import Aspect, Geometry, JointVector, Pose, ang_dist, singularity_value

SHEET_JUMP = 0.3  # max theta1 gap between stitched neighbors (radians)
BOUNDARY_BAND = 1e-3  # |S|/scale below which a vertex counts as boundary
MESH_SCHEMA = "cusp-atlas/mesh/v1"


@dataclass(frozen=True)
class CsMesh:
    """One aspect's surface: vertices (rho2, rho3, theta1, alpha, S) + faces."""

    rho1: float
    aspect: Aspect
    window: tuple[tuple[float, float], tuple[float, float]]
    grid_n: int
    vertices: np.ndarray  # (n, 5)
    faces: np.ndarray  # (m, 3) int
    boundary_polylines: tuple[np.ndarray, ...]  # vertex index arrays
    layer_id: np.ndarray  # (n,) int, 0 = undefined
    node_vertices: tuple[tuple[tuple[int, ...], ...], ...]  # [i][j] -> vertex ids

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def grid_axes(self) -> tuple[np.ndarray, np.ndarray]:
        (r2lo, r2hi), (r3lo, r3hi) = self.window
        return (
            np.linspace(r2lo, r2hi, self.grid_n),
            np.linspace(r3lo, r3hi, self.grid_n),
        )


def _nearest(theta: float, pool: list[float]) -> int | None:
    best, best_d = None, math.inf
    for k, th in enumerate(pool):
        d = ang_dist(theta, th)
        if d < best_d:
            best, best_d = k, d
    return best if best is not None and best_d <= SHEET_JUMP else None


def _branch_exists(g, rho1, state, r2, r3, jump=SHEET_JUMP):
    """Continue (theta1, alpha) to the joint point; None when the sheet is gone."""
    th, al, res = newton_polish(g, JointVector(rho1, r2, r3), state[0], state[1])
    if res > 1e-9 or ang_dist(th, state[0]) > jump:
        return None
    return th, al


def build_cs(
    g: Geometry,
    rho1: float,
    window: tuple[tuple[float, float], tuple[float, float]],
    grid_n: int = 128,
    progress=None,
) -> tuple[CsMesh, CsMesh]:
    """Scan the slice and assemble the two aspect surfaces."""
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    (r2lo, r2hi), (r3lo, r3hi) = window
    if r2lo <= 0 or r3lo <= 0 or r2hi <= r2lo or r3hi <= r3lo:
        raise ValueError("window must be positive and non-empty")
    rho2s = np.linspace(r2lo, r2hi, grid_n)
    rho3s = np.linspace(r3lo, r3hi, grid_n)

    # per-aspect scan results: node -> list of (theta1, alpha, S)
    node_sols = {
        Aspect.ASPECT_1: [[[] for _ in range(grid_n)] for _ in range(grid_n)],
        Aspect.ASPECT_2: [[[] for _ in range(grid_n)] for _ in range(grid_n)],
    }
    for i, r2 in enumerate(rho2s):
        if progress is not None:
            progress(i / grid_n)
        for j, r3 in enumerate(rho3s):
            ss = solve_dk(g, JointVector(rho1, r2, r3))
            for pose, aspect in ss.solutions:
                if aspect == Aspect.SINGULAR:
                    continue
                rec = (pose.theta1, pose.alpha, singularity_value(g, pose))
                bucket = node_sols[aspect][i][j]
                for other in bucket:
                    if ang_dist(other[0], rec[0]) < DEDUP_TOL:
                        raise DegenerateCoordinateError(
                            f"two aspect-{int(aspect)} solutions share theta1 at "
                            f"node ({r2:.4f}, {r3:.4f}); theta1 is not a valid "
                            "surface coordinate for this geometry"
                        )
                bucket.append(rec)
            for aspect in node_sols:
                node_sols[aspect][i][j].sort()

    meshes = []
    for aspect in (Aspect.ASPECT_1, Aspect.ASPECT_2):
        meshes.append(
            _assemble(g, rho1, window, grid_n, rho2s, rho3s, node_sols[aspect], aspect)
        )
    return meshes[0], meshes[1]


def _assemble(g, rho1, window, grid_n, rho2s, rho3s, sols, aspect) -> CsMesh:
    verts: list[tuple] = []
    vid = [[[] for _ in range(grid_n)] for _ in range(grid_n)]
    for i in range(grid_n):
        for j in range(grid_n):
            for th, al, s in sols[i][j]:
                vid[i][j].append(len(verts))
                verts.append((rho2s[i], rho3s[j], th, al, s))

    thetas = [[[t for t, _, _ in sols[i][j]] for j in range(grid_n)] for i in range(grid_n)]
    scale = g.scale

    # forward matches per edge family: matches[(di,dj)][(i,j,k)] = k2 or None
    matches: dict[tuple[int, int], dict[tuple[int, int, int], int | None]] = {
        (1, 0): {},
        (0, 1): {},
    }

    def mutual_match(i, j, k, di, dj):
        th = thetas[i][j][k]
        k2 = _nearest(th, thetas[i + di][j + dj])
        if k2 is None:
            return None
        back = _nearest(thetas[i + di][j + dj][k2], thetas[i][j])
        return k2 if back == k else None

    def continue_branch(i, j, k, di, dj, substeps: int = 8):
        """March the branch along the edge; (state, s_reached, survived)."""
        p0 = np.array([rho2s[i], rho3s[j]])
        p1 = np.array([rho2s[i + di], rho3s[j + dj]])
        state = (thetas[i][j][k], sols[i][j][k][1])
        s = 0.0
        for step in range(1, substeps + 1):
            s_try = step / substeps
            pm = p0 + s_try * (p1 - p0)
            nxt = _branch_exists(g, rho1, state, pm[0], pm[1])
            if nxt is None:
                return state, s, False
            state, s = nxt, s_try
        return state, s, True

    def locate_fold(i, j, k, di, dj):
        """Bisect along the grid edge until the surviving branch nearly folds."""
        p0 = np.array([rho2s[i], rho3s[j]])
        p1 = np.array([rho2s[i + di], rho3s[j + dj]])
        state, lo, _ = continue_branch(i, j, k, di, dj)
        hi = min(1.0, lo + 1.0 / 8.0)
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            pm = p0 + mid * (p1 - p0)
            nxt = _branch_exists(g, rho1, state, pm[0], pm[1])
            if nxt is None:
                hi = mid
            else:
                lo, state = mid, nxt
            pose = Pose(rho1, state[0], state[1])
            if abs(singularity_value(g, pose)) / scale < 0.3 * BOUNDARY_BAND:
                break
        pm = p0 + lo * (p1 - p0)
        s_val = singularity_value(g, Pose(rho1, state[0], state[1]))
        return (pm[0], pm[1], state[0], state[1], s_val)

    # match pass: mutual nearest first, then continuation confirms leftovers;
    # a branch that survives to the far node is a match the theta cap missed
    boundary_requests: list[tuple[int, int, int, int, int]] = []
    for i in range(grid_n):
        for j in range(grid_n):
            for di, dj in ((1, 0), (0, 1)):
                i2, j2 = i + di, j + dj
                if i2 >= grid_n or j2 >= grid_n:
                    continue
                fwd = matches[(di, dj)]
                claimed = set()
                for k in range(len(thetas[i][j])):
                    k2 = mutual_match(i, j, k, di, dj)
                    fwd[(i, j, k)] = k2
                    if k2 is not None:
                        claimed.add(k2)
                for k in range(len(thetas[i][j])):
                    if fwd[(i, j, k)] is not None:
                        continue
                    state, _s, survived = continue_branch(i, j, k, di, dj)
                    if survived:
                        pool = thetas[i2][j2]
                        k2 = min(
                            range(len(pool)),
                            key=lambda m: ang_dist(pool[m], state[0]),
                            default=None,
                        )
                        if (
                            k2 is not None
                            and k2 not in claimed
                            and ang_dist(pool[k2], state[0]) < 1e-6
                        ):
                            fwd[(i, j, k)] = k2
                            claimed.add(k2)
                            continue
                    boundary_requests.append((i, j, k, di, dj))
                # sheets alive at the far node but unreachable from here
                for k2 in range(len(thetas[i2][j2])):
                    if k2 not in claimed:
                        boundary_requests.append((i2, j2, k2, -di, -dj))

    faces = []
    for i in range(grid_n - 1):
        for j in range(grid_n - 1):
            for k in range(len(thetas[i][j])):
                kb = matches[(1, 0)].get((i, j, k))
                kd = matches[(0, 1)].get((i, j, k))
                if kb is None or kd is None:
                    continue
                kc = matches[(0, 1)].get((i + 1, j, kb))
                kc2 = matches[(1, 0)].get((i, j + 1, kd))
                if kc is None or kc != kc2:
                    continue
                a = vid[i][j][k]
                b = vid[i + 1][j][kb]
                c = vid[i + 1][j + 1][kc]
                d = vid[i][j + 1][kd]
                quad = (a, b, c, d)
                # sheet integrity: confirmed matches may exceed the theta cap
                # on coarse grids; such quads stay unfaced
                if any(
                    ang_dist(verts[x][2], verts[y][2]) > SHEET_JUMP
                    for x, y in zip(quad, quad[1:] + quad[:1])
                ) or ang_dist(verts[a][2], verts[c][2]) > SHEET_JUMP:
                    continue
                faces.append((a, b, c))
                faces.append((a, c, d))

    # fold localization for confirmed sheet ends
    boundary_events = {}  # (kind, i, j) -> list of boundary vertex ids
    for i, j, k, di, dj in boundary_requests:
        v = locate_fold(i, j, k, di, dj)
        if abs(v[4]) / scale > BOUNDARY_BAND:
            continue  # branch did not actually approach a fold; drop it
        kind = "h" if abs(di) else "v"
        ei, ej = (min(i, i + di), j) if kind == "h" else (i, min(j, j + dj))
        boundary_events.setdefault((kind, ei, ej), []).append(len(verts))
        verts.append(v)

    boundary_polylines = _chain_boundary(boundary_events, verts, grid_n)

    vertices = np.array(verts, dtype=float) if verts else np.zeros((0, 5))
    return CsMesh(
        rho1=rho1,
        aspect=aspect,
        window=window,
        grid_n=grid_n,
        vertices=vertices,
        faces=np.array(faces, dtype=int) if faces else np.zeros((0, 3), dtype=int),
        boundary_polylines=tuple(boundary_polylines),
        layer_id=np.zeros(len(verts), dtype=int),
        node_vertices=tuple(
            tuple(tuple(vid[i][j]) for j in range(grid_n)) for i in range(grid_n)
        ),
    )


def _chain_boundary(events, verts, grid_n) -> list[np.ndarray]:
    """Pair fold vertices within each grid cell and chain them into polylines."""
    # cell (i, j) borders: bottom ("h", i, j)... using edge naming relative to cells
    cell_members: dict[tuple[int, int], list[int]] = {}
    for (kind, i, j), ids in events.items():
        if kind == "h":
            cells = [(i, j - 1), (i, j)]
        else:
            cells = [(i - 1, j), (i, j)]
        for ci, cj in cells:
            if 0 <= ci < grid_n - 1 and 0 <= cj < grid_n - 1:
                cell_members.setdefault((ci, cj), []).extend(ids)

    segments = []
    for ids in cell_members.values():
        ids = sorted(set(ids))
        if len(ids) < 2:
            continue
        # pair by theta1 proximity within the cell
        remaining = sorted(ids, key=lambda v: verts[v][2])
        while len(remaining) >= 2:
            a = remaining.pop(0)
            b = min(remaining, key=lambda v: abs(verts[v][2] - verts[a][2]))
            remaining.remove(b)
            segments.append((a, b))

    adj: dict[int, list[int]] = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    polylines = []
    for start in sorted(adj):
        if start in seen or len(adj[start]) > 1:
            continue
        chain = [start]
        seen.add(start)
        while True:
            nxts = [x for x in adj[chain[-1]] if x not in seen]
            if not nxts:
                break
            chain.append(nxts[0])
            seen.add(nxts[0])
        if len(chain) >= 2:
            polylines.append(np.array(chain, dtype=int))
    # closed chains (every vertex has 2 partners)
    for start in sorted(adj):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        while True:
            nxts = [x for x in adj[chain[-1]] if x not in seen]
            if not nxts:
                break
            chain.append(nxts[0])
            seen.add(nxts[0])
        if len(chain) >= 2:
            polylines.append(np.array(chain, dtype=int))
    return polylines


def extract_layers(m: CsMesh) -> CsMesh:
    """Label vertices 1..3 by ascending theta1 wherever a node carries 3 sheets."""
    layer = np.zeros(len(m.vertices), dtype=int)
    for i in range(m.grid_n):
        for j in range(m.grid_n):
            ids = m.node_vertices[i][j]
            if len(ids) != 3:
                continue
            order = sorted(ids, key=lambda v: m.vertices[v, 2])
            for rank, v in enumerate(order, start=1):
                layer[v] = rank
    return replace(m, layer_id=layer)


def export_mesh(m: CsMesh, fmt: str = "json") -> bytes:
    """Serialize a mesh losslessly (JSON) or for rendering (OBJ)."""
    if fmt == "json":
        doc = {
            "schema": MESH_SCHEMA,
            "rho1": m.rho1,
            "aspect": int(m.aspect),
            "grid": {"window": [list(m.window[0]), list(m.window[1])], "n": m.grid_n},
            "vertices": [
                [v[0], v[1], v[2], v[3], v[4], int(l)]
                for v, l in zip(m.vertices, m.layer_id)
            ],
            "faces": [[int(a), int(b), int(c)] for a, b, c in m.faces],
            "boundary": [[int(x) for x in pl] for pl in m.boundary_polylines],
        }
        from .jsonio import dumps

        return dumps(doc).encode("utf-8")
    if fmt == "obj":
        buf = io.StringIO()
        buf.write(f"# cusp-atlas CS mesh, rho1={m.rho1!r}, aspect={int(m.aspect)}\n")
        for v in m.vertices:
            buf.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        for a, b, c in m.faces:
            buf.write(f"f {a + 1} {b + 1} {c + 1}\n")
        for pl in m.boundary_polylines:
            buf.write("l " + " ".join(str(int(x) + 1) for x in pl) + "\n")
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unsupported mesh format {fmt!r}")


def mesh_from_json(data: bytes | str) -> CsMesh:
    """Rebuild a CsMesh from its JSON export (inverse of export_mesh)."""
    doc = json.loads(data)
    if doc.get("schema") != MESH_SCHEMA:
        raise ValueError(f"not a mesh document: {doc.get('schema')!r}")
    window = (
        (doc["grid"]["window"][0][0], doc["grid"]["window"][0][1]),
        (doc["grid"]["window"][1][0], doc["grid"]["window"][1][1]),
    )
    grid_n = int(doc["grid"]["n"])
    raw = np.array(doc["vertices"], dtype=float) if doc["vertices"] else np.zeros((0, 6))
    vertices = raw[:, :5] if len(raw) else np.zeros((0, 5))
    layer = raw[:, 5].astype(int) if len(raw) else np.zeros(0, dtype=int)
    rho2s = np.linspace(window[0][0], window[0][1], grid_n)
    rho3s = np.linspace(window[1][0], window[1][1], grid_n)
    node_vertices = [[[] for _ in range(grid_n)] for _ in range(grid_n)]
    for vidx, v in enumerate(vertices):
        i = int(round((v[0] - window[0][0]) / (rho2s[1] - rho2s[0])))
        j = int(round((v[1] - window[1][0]) / (rho3s[1] - rho3s[0])))
        if (
            0 <= i < grid_n
            and 0 <= j < grid_n
            and math.isclose(v[0], rho2s[i], abs_tol=1e-12)
            and math.isclose(v[1], rho3s[j], abs_tol=1e-12)
        ):
            node_vertices[i][j].append(vidx)
    return CsMesh(
        rho1=float(doc["rho1"]),
        aspect=Aspect(int(doc["aspect"])),
        window=window,
        grid_n=grid_n,
        vertices=vertices,
        faces=np.array(doc["faces"], dtype=int) if doc["faces"] else np.zeros((0, 3), dtype=int),
        boundary_polylines=tuple(np.array(pl, dtype=int) for pl in doc["boundary"]),
        layer_id=layer,
        node_vertices=tuple(
            tuple(tuple(node_vertices[i][j]) for j in range(grid_n))
            for i in range(grid_n)
        ),
    )
