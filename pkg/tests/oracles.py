"""Independent oracles: brute-force implementations the library is checked against.

These deliberately share no code path with the solvers under test: the DK
oracle is a dense grid scan plus vectorized Newton on the raw constraint
equations, and the Jacobian oracle is plain central differences.
"""

from __future__ import annotations

import math

import numpy as np

from cusp_atlas.geometry import Geometry, JointVector


def dk_brute(
    g: Geometry,
    q: JointVector,
    seeds: int = 48,
    iters: int = 40,
    residual_tol: float = 1e-10,
) -> list[tuple[float, float]]:
    """All (theta1, alpha) assembly modes by dense multistart Newton."""
    axis = -math.pi + 2.0 * math.pi * np.arange(seeds) / seeds
    th, al = np.meshgrid(axis, axis, indexing="ij")
    th = th.ravel().copy()
    al = al.ravel().copy()
    rho1, a2x = q.rho1, g.a2x
    a3x, a3y = g.a3x, g.a3y
    d1, d3, beta = g.d1, g.d3, g.beta
    u2, u3 = q.rho2**2, q.rho3**2
    for _ in range(iters):
        cth, sth = np.cos(th), np.sin(th)
        ca, sa = np.cos(al), np.sin(al)
        cab, sab = np.cos(al + beta), np.sin(al + beta)
        v2x = rho1 * cth + d1 * ca - a2x
        v2y = rho1 * sth + d1 * sa
        v3x = rho1 * cth + d3 * cab - a3x
        v3y = rho1 * sth + d3 * sab - a3y
        f2 = v2x * v2x + v2y * v2y - u2
        f3 = v3x * v3x + v3y * v3y - u3
        j11 = 2.0 * rho1 * (cth * v2y - sth * v2x)
        j12 = 2.0 * d1 * (ca * v2y - sa * v2x)
        j21 = 2.0 * rho1 * (cth * v3y - sth * v3x)
        j22 = 2.0 * d3 * (cab * v3y - sab * v3x)
        det = j11 * j22 - j12 * j21
        ok = np.abs(det) > 1e-14
        dth = np.where(ok, (-f2 * j22 + f3 * j12) / np.where(ok, det, 1.0), 0.0)
        dal = np.where(ok, (-j11 * f3 + j21 * f2) / np.where(ok, det, 1.0), 0.0)
        step = np.hypot(dth, dal)
        clip = np.where(step > 0.5, 0.5 / np.maximum(step, 1e-300), 1.0)
        th = th + dth * clip
        al = al + dal * clip
    cth, sth = np.cos(th), np.sin(th)
    ca, sa = np.cos(al), np.sin(al)
    cab, sab = np.cos(al + beta), np.sin(al + beta)
    f2 = (rho1 * cth + d1 * ca - a2x) ** 2 + (rho1 * sth + d1 * sa) ** 2 - u2
    f3 = (rho1 * cth + d3 * cab - a3x) ** 2 + (rho1 * sth + d3 * sab - a3y) ** 2 - u3
    scale = max(1.0, u2, u3)
    good = (np.abs(f2) < residual_tol * scale) & (np.abs(f3) < residual_tol * scale)
    th = np.arctan2(np.sin(th[good]), np.cos(th[good]))
    al = np.arctan2(np.sin(al[good]), np.cos(al[good]))
    found: dict[tuple[int, int], tuple[float, float]] = {}
    for t, a in zip(th, al):
        # converged Newton iterates collapse to machine-identical roots
        key = (int(round(t * 1e7)), int(round(a * 1e7)))
        found.setdefault(key, (float(t), float(a)))
    # merge keys that straddle a rounding boundary
    out: list[tuple[float, float]] = []
    for t, a in sorted(found.values()):
        if all(
            math.hypot(
                math.remainder(t - t2, 2.0 * math.pi),
                math.remainder(a - a2, 2.0 * math.pi),
            )
            > 1e-6
            for t2, a2 in out
        ):
            out.append((t, a))
    return out


def fd_constraint_jacobian(g: Geometry, x: float, y: float, alpha: float, q: JointVector, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the constraints wrt (x, y, alpha)."""
    from cusp_atlas.geometry import constraint_residual_cartesian

    jac = np.zeros((3, 3))
    for col, (dx, dy, da) in enumerate(
        ((step, 0.0, 0.0), (0.0, step, 0.0), (0.0, 0.0, step))
    ):
        fp = constraint_residual_cartesian(g, x + dx, y + dy, alpha + da, q)
        fm = constraint_residual_cartesian(g, x - dx, y - dy, alpha - da, q)
        jac[:, col] = (fp - fm) / (2.0 * step)
    return jac


def lines_concurrent_or_parallel(lines, tol: float = 1e-8) -> bool:
    """Determinant test on row-normalized planar line coordinates."""
    rows = []
    for point, direction in lines:
        n = np.array([-direction[1], direction[0]])
        n = n / np.linalg.norm(n)
        row = np.array([n[0], n[1], -float(n @ point)])
        rows.append(row / np.linalg.norm(row))
    return abs(np.linalg.det(np.array(rows))) < tol


def pairwise_intersections(lines):
    """Intersection points of each line pair; None for near-parallel pairs."""
    pts = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            (p1, d1), (p2, d2) = lines[i], lines[j]
            denom = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(denom) < 1e-12:
                pts.append(None)
                continue
            t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / denom
            pts.append(p1 + t * d1)
    return pts
