"""Winding number of a closed planar polyline around a point."""

from __future__ import annotations

import math

import numpy as np

from .errors import OnBoundaryError

BOUNDARY_TOL = 1e-6


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(p - (a + t * ab))))


def winding_number(
    loop: np.ndarray, point, boundary_tol: float = BOUNDARY_TOL
) -> int:
    """Signed number of revolutions of `loop` (closed polyline) around `point`.

    The loop is given by its vertices; the closing segment from the last
    vertex back to the first is implicit.  Raises OnBoundaryError when the
    point lies within boundary_tol of the polyline.
    """
    verts = np.asarray(loop, dtype=float)
    if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
        raise ValueError("loop must be an (n >= 3, 2) vertex array")
    p = np.asarray(point, dtype=float)
    total = 0.0
    n = verts.shape[0]
    for k in range(n):
        a = verts[k]
        b = verts[(k + 1) % n]
        if _point_segment_distance(p, a, b) < boundary_tol:
            raise OnBoundaryError(
                f"point {p.tolist()} lies on the polygon (within {boundary_tol})"
            )
        u = a - p
        v = b - p
        total += math.atan2(
            u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1]
        )
    return int(round(total / (2.0 * math.pi)))
