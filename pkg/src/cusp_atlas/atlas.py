"""Singular curves of a fixed-rho1 slice and their joint-space image.

The zero set of the singularity function S is extracted on the workspace
torus (alpha, theta1) by marching squares on a wrap-around grid, with each
crossing refined by bisection along its grid edge.  The joint-space curves
are the vertex-wise image under the inverse kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .dk import solve_dk
from .errors import DegenerateLegError
from .geometry import Geometry, JointVector, Pose, inverse_kinematics, singularity_grid

CONTOUR_TOL = 1e-8  # on normalized S, after edge bisection
DEFAULT_GRID_N = 512


@dataclass(frozen=True)
class Polyline:
    """Ordered vertices of one curve piece; closed means last connects to first."""

    vertices: np.ndarray  # (n, 2)
    closed: bool


@dataclass(frozen=True)
class WorkspaceContour:
    """Zero-contour of S on the (alpha, theta1) torus at fixed rho1."""

    rho1: float
    polylines: tuple[Polyline, ...]
    contour_tol: float
    grid_n: int


@dataclass(frozen=True)
class JointSliceCurve:
    """Image of a WorkspaceContour in the (rho2, rho3) plane."""

    rho1: float
    polylines: tuple[Polyline, ...]
    dropped_vertices: int


def _axis(grid_n: int) -> np.ndarray:
    return -math.pi + 2.0 * math.pi * np.arange(grid_n) / grid_n


def _refine_edges(g, rho1, alpha0, theta0, dalpha, dtheta, s0, tol, step):
    """Vectorized bisection along grid edges; returns crossing offsets in [0, step]."""
    lo = np.zeros_like(alpha0)
    hi = np.full_like(alpha0, step)
    flo = s0.copy()
    x = 0.5 * (lo + hi)
    for _ in range(60):
        x = 0.5 * (lo + hi)
        fx = (
            singularity_grid(g, rho1, theta0 + dtheta * x, alpha0 + dalpha * x)
            / g.scale
        )
        if np.all(np.abs(fx) < tol):
            break
        same = (fx > 0.0) == (flo > 0.0)
        lo = np.where(same, x, lo)
        flo = np.where(same, fx, flo)
        hi = np.where(same, hi, x)
    return x


def workspace_singular_contour(
    g: Geometry,
    rho1: float,
    grid_n: int = DEFAULT_GRID_N,
    contour_tol: float = CONTOUR_TOL,
) -> WorkspaceContour:
    """Marching-squares zero contour of S over a wrap-around (alpha, theta1) grid."""
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    ax = _axis(grid_n)
    s = singularity_grid(g, rho1, ax[None, :], ax[:, None]) / g.scale
    finite = np.isfinite(s)
    pos = s > 0.0
    step = 2.0 * math.pi / grid_n

    # sign changes along the two edge families, wrap-aware
    hcross = (pos != np.roll(pos, -1, axis=0)) & finite & np.roll(finite, -1, axis=0)
    vcross = (pos != np.roll(pos, -1, axis=1)) & finite & np.roll(finite, -1, axis=1)

    points: dict[tuple[str, int, int], np.ndarray] = {}
    for kind, mask in (("h", hcross), ("v", vcross)):
        idx = np.argwhere(mask)
        if idx.size == 0:
            continue
        a0 = ax[idx[:, 0]]
        t0 = ax[idx[:, 1]]
        da = 1.0 if kind == "h" else 0.0
        dt = 1.0 - da
        x = _refine_edges(g, rho1, a0, t0, da, dt, s[mask], contour_tol, step)
        for (i, j), off in zip(idx, x):
            if kind == "h":
                points[(kind, int(i), int(j))] = np.array([ax[i] + off, ax[j]])
            else:
                points[(kind, int(i), int(j))] = np.array([ax[i], ax[j] + off])

    # cells owning at least one crossed edge
    cell_mask = (
        hcross
        | np.roll(hcross, -1, axis=1)
        | vcross
        | np.roll(vcross, -1, axis=0)
    )
    segments: list[tuple[tuple, tuple]] = []
    for i, j in np.argwhere(cell_mask):
        i1, j1 = (i + 1) % grid_n, (j + 1) % grid_n
        keys = []
        if hcross[i, j]:
            keys.append(("h", int(i), int(j)))  # bottom
        if vcross[i1, j]:
            keys.append(("v", int(i1), int(j)))  # right
        if hcross[i, j1]:
            keys.append(("h", int(i), int(j1)))  # top
        if vcross[i, j]:
            keys.append(("v", int(i), int(j)))  # left
        if len(keys) == 2:
            segments.append((keys[0], keys[1]))
        elif len(keys) == 4:
            # saddle cell: the center sample decides the pairing
            center = float(
                singularity_grid(
                    g,
                    rho1,
                    np.float64(ax[j] + 0.5 * step),
                    np.float64(ax[i] + 0.5 * step),
                )
            ) / g.scale
            if (center > 0.0) == bool(pos[i, j]):
                segments.append((keys[0], keys[1]))  # bottom-right
                segments.append((keys[2], keys[3]))  # top-left
            else:
                segments.append((keys[0], keys[3]))  # bottom-left
                segments.append((keys[1], keys[2]))  # right-top
    polylines = _stitch(segments, points)
    return WorkspaceContour(
        rho1=rho1, polylines=tuple(polylines), contour_tol=contour_tol, grid_n=grid_n
    )


def _stitch(segments, points) -> list[Polyline]:
    """Chain marching-squares segments into polylines via shared edge keys."""
    adj: dict[tuple, list[int]] = {}
    for idx, (a, b) in enumerate(segments):
        adj.setdefault(a, []).append(idx)
        adj.setdefault(b, []).append(idx)
    used = [False] * len(segments)
    polylines = []
    for start_idx in range(len(segments)):
        if used[start_idx]:
            continue
        used[start_idx] = True
        a, b = segments[start_idx]
        chain = [a, b]
        closed = False
        # extend forward from the tail, then backward from the head
        for end in (1, 0):
            if closed:
                break
            while True:
                tip = chain[-1] if end == 1 else chain[0]
                nxt = None
                for idx in adj.get(tip, ()):
                    if not used[idx]:
                        nxt = idx
                        break
                if nxt is None:
                    break
                used[nxt] = True
                sa, sb = segments[nxt]
                other = sb if sa == tip else sa
                if end == 1:
                    chain.append(other)
                else:
                    chain.insert(0, other)
                if chain[0] == chain[-1]:
                    closed = True
                    chain.pop()
                    break
        verts = np.array([points[k] for k in chain])
        polylines.append(Polyline(vertices=verts, closed=closed))
    polylines.sort(key=lambda p: (p.vertices[0, 0], p.vertices[0, 1]))
    return polylines


def joint_slice_curves(g: Geometry, wc: WorkspaceContour) -> JointSliceCurve:
    """Per-vertex image of the workspace contour under the inverse kinematics."""
    out = []
    dropped_total = 0
    for pl in wc.polylines:
        runs: list[list[np.ndarray]] = [[]]
        dropped_here = 0
        for alpha, theta1 in pl.vertices:
            try:
                q = inverse_kinematics(g, Pose(wc.rho1, theta1, alpha))
            except DegenerateLegError:
                dropped_here += 1
                if runs[-1]:
                    runs.append([])
                continue
            runs[-1].append(np.array([q.rho2, q.rho3]))
        dropped_total += dropped_here
        if not runs[-1]:
            runs.pop()
        if dropped_here == 0:
            if runs and len(runs[0]) >= 2:
                out.append(Polyline(vertices=np.array(runs[0]), closed=pl.closed))
            continue
        # polyline was cut: on a closed source the first and last runs wrap around
        if pl.closed and len(runs) > 1:
            runs[-1].extend(runs.pop(0))
        for run in runs:
            if len(run) >= 2:
                out.append(Polyline(vertices=np.array(run), closed=False))
    return JointSliceCurve(
        rho1=wc.rho1, polylines=tuple(out), dropped_vertices=dropped_total
    )


def solution_count_map(
    g: Geometry,
    rho1: float,
    window: tuple[tuple[float, float], tuple[float, float]],
    grid_n: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-node direct-kinematics solution counts over a (rho2, rho3) window.

    Returns (counts, reliable); unreliable nodes sit too close to the
    discriminant for the count to be trusted.
    """
    if grid_n < 32:
        raise ValueError("grid_n must be at least 32")
    (r2lo, r2hi), (r3lo, r3hi) = window
    if r2lo <= 0 or r3lo <= 0 or r2hi <= r2lo or r3hi <= r3lo:
        raise ValueError("window must be positive and non-empty")
    rho2s = np.linspace(r2lo, r2hi, grid_n)
    rho3s = np.linspace(r3lo, r3hi, grid_n)
    counts = np.zeros((grid_n, grid_n), dtype=int)
    reliable = np.ones((grid_n, grid_n), dtype=bool)
    for i, r2 in enumerate(rho2s):
        for j, r3 in enumerate(rho3s):
            ss = solve_dk(g, JointVector(rho1, r2, r3))
            counts[i, j] = len(ss)
            reliable[i, j] = not ss.near_discriminant
    return counts, reliable


def aspect_component_count(g: Geometry, rho1: float, grid_n: int = DEFAULT_GRID_N) -> int:
    """Number of connected sign regions of S on the workspace torus (flood fill)."""
    ax = _axis(grid_n)
    s = singularity_grid(g, rho1, ax[None, :], ax[:, None]) / g.scale
    total = 0
    for mask in (s > 0.0, (s < 0.0) & np.isfinite(s)):
        labels, n = ndimage.label(mask)
        if n == 0:
            continue
        parent = list(range(n + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry

        # merge components across the periodic seam
        for a, b in ((labels[0, :], labels[-1, :]), (labels[:, 0], labels[:, -1])):
            both = (a > 0) & (b > 0)
            for x, y in zip(a[both], b[both]):
                union(int(x), int(y))
        total += len({find(x) for x in range(1, n + 1)})
    return total
