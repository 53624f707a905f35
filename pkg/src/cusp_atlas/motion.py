"""Assembly-mode continuation along joint-space trajectories.

A trajectory fixes rho1 and moves (rho2, rho3) along a piecewise-linear
path.  One assembly mode is tracked by a Newton predictor-corrector on
(theta1, alpha).  The 2x2 corrector matrix degenerates exactly where the
full Jacobian does (det = -4 rho1 rho2 rho3 S / ...), so a certified fold of
the tracked branch is a type-2 singularity: the trace stops there.  Closed
loops end back at the start joint vector, where the arrival configuration is
matched against the start solution set to detect assembly-mode changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cusps import CuspPoint
from .dk import SolutionSet, solve_dk
from .errors import (
    CorrectorDivergedError,
    OnBoundaryError,
    StartInconsistentError,
)
from .geometry import (
    Geometry,
    JointVector,
    Pose,
    ang_dist,
    constraint_residual,
    singularity_value,
    wrap_angle,
)
from .winding import BOUNDARY_TOL, winding_number

FOLD_TOL = 1e-7  # on the normalized corrector determinant
STEP_INIT = 1e-2
STEP_MIN = 1e-8
STEP_MAX = 0.1
CORRECTOR_TOL = 1e-11
CORRECTOR_ITERS = 12
MATCH_TOL = 1e-6  # (theta1, alpha) distance for identifying modes


class Outcome(str, Enum):
    SINGULAR_STOP = "SINGULAR_STOP"
    LOOP_SAME_MODE = "LOOP_SAME_MODE"
    MODE_CHANGE = "MODE_CHANGE"
    OPEN_END = "OPEN_END"


@dataclass(frozen=True)
class JointTrajectory:
    """Piecewise-linear (rho2, rho3) path at fixed rho1, arclength-parametrized."""

    rho1: float
    waypoints: np.ndarray  # (n, 2)
    closed: bool

    def __post_init__(self):
        w = np.asarray(self.waypoints, dtype=float)
        if w.ndim != 2 or w.shape[0] < 2 or w.shape[1] != 2:
            raise ValueError("need at least two (rho2, rho3) waypoints")
        if w.min() <= 0.0 or self.rho1 <= 0.0:
            raise ValueError("joint coordinates must stay positive")
        object.__setattr__(self, "waypoints", w)

    def _cumlen(self) -> np.ndarray:
        pts = self._poly_points()
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if cum[-1] == 0.0:
            raise ValueError("trajectory has zero length")
        return cum

    def _poly_points(self) -> np.ndarray:
        if self.closed:
            return np.vstack([self.waypoints, self.waypoints[:1]])
        return self.waypoints

    def point_at(self, s: float) -> np.ndarray:
        """Path point at normalized arclength s in [0, 1]."""
        cum = self._cumlen()
        pts = self._poly_points()
        target = min(max(s, 0.0), 1.0) * cum[-1]
        k = int(np.searchsorted(cum, target, side="right") - 1)
        k = min(k, len(pts) - 2)
        seg = cum[k + 1] - cum[k]
        t = 0.0 if seg == 0.0 else (target - cum[k]) / seg
        return pts[k] + t * (pts[k + 1] - pts[k])

    def joint_at(self, s: float) -> JointVector:
        p = self.point_at(s)
        return JointVector(self.rho1, float(p[0]), float(p[1]))

    def tangent_at(self, s: float) -> np.ndarray:
        """d(rho2, rho3)/ds (constant per segment)."""
        cum = self._cumlen()
        pts = self._poly_points()
        target = min(max(s, 0.0), 1.0) * cum[-1]
        k = int(np.searchsorted(cum, target, side="right") - 1)
        k = min(k, len(pts) - 2)
        seg = cum[k + 1] - cum[k]
        if seg == 0.0:
            return np.zeros(2)
        return (pts[k + 1] - pts[k]) / seg * cum[-1]

    def reversed(self) -> "JointTrajectory":
        """Same path traversed in the opposite direction, same start point."""
        if self.closed:
            w = np.vstack([self.waypoints[:1], self.waypoints[:0:-1]])
        else:
            w = self.waypoints[::-1]
        return JointTrajectory(rho1=self.rho1, waypoints=w, closed=self.closed)

    def to_dict(self) -> dict:
        return {
            "rho1": self.rho1,
            "closed": self.closed,
            "waypoints": [[float(a), float(b)] for a, b in self.waypoints],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointTrajectory":
        return cls(
            rho1=float(d["rho1"]),
            waypoints=np.array(d["waypoints"], dtype=float),
            closed=bool(d["closed"]),
        )


@dataclass(frozen=True)
class TraceResult:
    """Continued branch along a trajectory plus the terminal event."""

    samples: np.ndarray  # (n, 6): s, rho2, rho3, theta1, alpha, S
    outcome: Outcome
    stop_pose: Pose | None
    start_mode_index: int | None
    end_mode_index: int | None


def _corrector(g: Geometry, rho1, r2, r3, th, al):
    """Newton on (f2, f3) at fixed joints; returns state, residual, det info."""
    u2, u3 = r2 * r2, r3 * r3
    a2x, a3x, a3y = g.a2x, g.a3x, g.a3y
    d1, d3, beta = g.d1, g.d3, g.beta
    res = math.inf
    det_n = math.nan
    for it in range(CORRECTOR_ITERS):
        cth, sth = math.cos(th), math.sin(th)
        ca, sa = math.cos(al), math.sin(al)
        cab, sab = math.cos(al + beta), math.sin(al + beta)
        v2x, v2y = rho1 * cth + d1 * ca - a2x, rho1 * sth + d1 * sa
        v3x, v3y = rho1 * cth + d3 * cab - a3x, rho1 * sth + d3 * sab - a3y
        f2 = v2x * v2x + v2y * v2y - u2
        f3 = v3x * v3x + v3y * v3y - u3
        res = max(abs(f2), abs(f3))
        j11 = 2.0 * rho1 * (cth * v2y - sth * v2x)
        j12 = 2.0 * d1 * (ca * v2y - sa * v2x)
        j21 = 2.0 * rho1 * (cth * v3y - sth * v3x)
        j22 = 2.0 * d3 * (cab * v3y - sab * v3x)
        det = j11 * j22 - j12 * j21
        norm = math.hypot(j11, j12) * math.hypot(j21, j22)
        det_n = det / norm if norm > 0 else 0.0
        if res < CORRECTOR_TOL * max(1.0, u2, u3):
            return th, al, res, det_n, it
        if det == 0.0:
            break
        th += (-f2 * j22 + f3 * j12) / det
        al += (-j11 * f3 + j21 * f2) / det
    return th, al, res, det_n, CORRECTOR_ITERS


def _predict(g: Geometry, rho1, r2, r3, th, al, dq):
    """First-order branch motion for a joint increment dq = (drho2, drho3)."""
    cth, sth = math.cos(th), math.sin(th)
    ca, sa = math.cos(al), math.sin(al)
    cab, sab = math.cos(al + g.beta), math.sin(al + g.beta)
    v2x, v2y = rho1 * cth + g.d1 * ca - g.a2x, rho1 * sth + g.d1 * sa
    v3x, v3y = rho1 * cth + g.d3 * cab - g.a3x, rho1 * sth + g.d3 * sab - g.a3y
    j11 = 2.0 * rho1 * (cth * v2y - sth * v2x)
    j12 = 2.0 * g.d1 * (ca * v2y - sa * v2x)
    j21 = 2.0 * rho1 * (cth * v3y - sth * v3x)
    j22 = 2.0 * g.d3 * (cab * v3y - sab * v3x)
    det = j11 * j22 - j12 * j21
    if det == 0.0:
        return 0.0, 0.0
    r1 = 2.0 * r2 * dq[0]
    r2b = 2.0 * r3 * dq[1]
    dth = (r1 * j22 - r2b * j12) / det
    dal = (j11 * r2b - j21 * r1) / det
    return dth, dal


def _fold_newton(g: Geometry, traj: JointTrajectory, th, al, s):
    """Newton on {f2 = 0, f3 = 0, det = 0} in (theta1, alpha, s): the exact fold."""
    x = np.array([th, al, s])
    eps = 1e-7
    for _ in range(60):
        p = traj.point_at(x[2])
        q = JointVector(traj.rho1, float(p[0]), float(p[1]))
        pose = Pose(traj.rho1, x[0], x[1])
        f = constraint_residual(g, pose, q)
        det = _det2_at(g, traj.rho1, p[0], p[1], x[0], x[1])
        scale = max(1.0, q.rho2**2, q.rho3**2)
        vals = np.array([f[1] / scale, f[2] / scale, det])
        if np.abs(vals).max() < 1e-12:
            break
        jac = np.zeros((3, 3))
        for col in range(3):
            xp = x.copy()
            xp[col] += eps
            pp = traj.point_at(xp[2])
            qp = JointVector(traj.rho1, float(pp[0]), float(pp[1]))
            fp = constraint_residual(g, Pose(traj.rho1, xp[0], xp[1]), qp)
            detp = _det2_at(g, traj.rho1, pp[0], pp[1], xp[0], xp[1])
            jac[:, col] = (
                np.array([fp[1] / scale, fp[2] / scale, detp]) - vals
            ) / eps
        try:
            dx = np.linalg.solve(jac, -vals)
        except np.linalg.LinAlgError:
            return None
        n = np.linalg.norm(dx)
        if n > 0.2:
            dx *= 0.2 / n
        x = x + dx
        if n < 1e-15:
            break
    p = traj.point_at(x[2])
    q = JointVector(traj.rho1, float(p[0]), float(p[1]))
    pose = Pose(traj.rho1, x[0], x[1])
    f = constraint_residual(g, pose, q)
    if max(abs(f[1]), abs(f[2])) < 1e-8 * max(1.0, q.rho2**2, q.rho3**2):
        return pose, float(x[2])
    return None


def _det2_at(g: Geometry, rho1, r2, r3, th, al) -> float:
    cth, sth = math.cos(th), math.sin(th)
    ca, sa = math.cos(al), math.sin(al)
    cab, sab = math.cos(al + g.beta), math.sin(al + g.beta)
    v2x, v2y = rho1 * cth + g.d1 * ca - g.a2x, rho1 * sth + g.d1 * sa
    v3x, v3y = rho1 * cth + g.d3 * cab - g.a3x, rho1 * sth + g.d3 * sab - g.a3y
    j11 = 2.0 * rho1 * (cth * v2y - sth * v2x)
    j12 = 2.0 * g.d1 * (ca * v2y - sa * v2x)
    j21 = 2.0 * rho1 * (cth * v3y - sth * v3x)
    j22 = 2.0 * g.d3 * (cab * v3y - sab * v3x)
    norm = math.hypot(j11, j12) * math.hypot(j21, j22)
    return (j11 * j22 - j12 * j21) / norm if norm > 0 else 0.0


def _nearest_mode(solset: SolutionSet, th: float, al: float):
    best, best_d = None, math.inf
    for k, (p, _) in enumerate(solset.solutions):
        d = math.hypot(ang_dist(p.theta1, th), ang_dist(p.alpha, al))
        if d < best_d:
            best, best_d = k, d
    return best, best_d


def trace(
    g: Geometry,
    traj: JointTrajectory,
    start: Pose,
    start_set: SolutionSet | None = None,
    cross_check: bool = True,
    max_step: float = STEP_MAX,
) -> TraceResult:
    """Continue the assembly mode of `start` along the trajectory."""
    q0 = traj.joint_at(0.0)
    f0 = constraint_residual(g, start, q0)
    if np.abs(f0[1:]).max() > 1e-9 * max(1.0, q0.rho2**2, q0.rho3**2) or abs(
        start.rho1 - traj.rho1
    ) > 1e-12:
        raise StartInconsistentError(
            f"start pose residual {np.abs(f0).max():.3e} at s=0"
        )
    if start_set is None:
        start_set = solve_dk(g, q0)
    start_idx, d0 = _nearest_mode(start_set, start.theta1, start.alpha)
    if d0 > 1e-6:
        raise StartInconsistentError("start pose is not among the solutions at q(0)")

    th, al = start.theta1, start.alpha
    det_sign = _det2_at(g, traj.rho1, q0.rho2, q0.rho3, th, al)
    if abs(det_sign) < FOLD_TOL:
        raise StartInconsistentError("start pose is singular; no branch to follow")
    s = 0.0
    h = STEP_INIT
    samples = [
        (
            0.0,
            q0.rho2,
            q0.rho3,
            th,
            al,
            singularity_value(g, Pose(traj.rho1, th, al)),
        )
    ]
    while s < 1.0:
        h = min(h, max_step, 1.0 - s)
        accepted = False
        while h >= STEP_MIN:
            s_try = s + h
            p = traj.point_at(s_try)
            dq = p - traj.point_at(s)
            dth, dal = _predict(g, traj.rho1, *traj.point_at(s), th, al, dq)
            step_norm = math.hypot(dth, dal)
            if step_norm > 0.3:
                h *= 0.5
                continue
            th2, al2, res, det_n, iters = _corrector(
                g, traj.rho1, p[0], p[1], th + dth, al + dal
            )
            moved = math.hypot(ang_dist(th2, th), ang_dist(al2, al))
            # a regular branch never crosses det = 0: a sign flip means the
            # corrector fell onto the mirror branch across a fold
            if res < 1e-9 and moved < 0.3 and det_n * det_sign > 0.0:
                accepted = True
                break
            h *= 0.5
        if not accepted:
            # bracket [s, s + STEP_MIN]: localize the fold and certify it
            fold = _fold_newton(g, traj, th, al, s)
            last_det = abs(_det2_at(g, traj.rho1, *traj.point_at(s), th, al))
            if fold is not None and abs(fold[1] - s) < 0.05:
                stop_pose, s_stop = fold
                samples.append(
                    (
                        s_stop,
                        *traj.point_at(s_stop),
                        stop_pose.theta1,
                        stop_pose.alpha,
                        singularity_value(g, stop_pose),
                    )
                )
                return TraceResult(
                    samples=np.array(samples),
                    outcome=Outcome.SINGULAR_STOP,
                    stop_pose=stop_pose,
                    start_mode_index=start_idx,
                    end_mode_index=None,
                )
            raise CorrectorDivergedError(
                f"step floor reached at s={s:.6f} without a fold certificate "
                f"(|det|={last_det:.2e})"
            )
        s = s + h
        th, al = wrap_angle(th2), wrap_angle(al2)
        if cross_check:
            qs = traj.joint_at(s)
            ss = solve_dk(g, qs)
            _, dist = _nearest_mode(ss, th, al)
            if dist > 1e-6:
                raise CorrectorDivergedError(
                    f"traced state at s={s:.6f} does not match any DK solution"
                )
        samples.append(
            (
                s,
                *traj.point_at(s),
                th,
                al,
                singularity_value(g, Pose(traj.rho1, th, al)),
            )
        )
        if iters <= 3:
            h = min(h * 1.6, STEP_MAX)

    if not traj.closed:
        return TraceResult(
            samples=np.array(samples),
            outcome=Outcome.OPEN_END,
            stop_pose=None,
            start_mode_index=start_idx,
            end_mode_index=None,
        )
    end_idx, dist = _nearest_mode(start_set, th, al)
    if dist > MATCH_TOL:
        raise CorrectorDivergedError(
            f"closed trace did not land on a start solution (distance {dist:.2e})"
        )
    outcome = Outcome.LOOP_SAME_MODE if end_idx == start_idx else Outcome.MODE_CHANGE
    return TraceResult(
        samples=np.array(samples),
        outcome=outcome,
        stop_pose=None,
        start_mode_index=start_idx,
        end_mode_index=end_idx,
    )


@dataclass(frozen=True)
class LoopRun:
    start_index: int
    direction: int  # +1 forward, -1 reversed
    outcome: Outcome
    end_mode_index: int | None


@dataclass(frozen=True)
class LoopClassification:
    start_set: SolutionSet
    runs: tuple[LoopRun, ...]
    crossings: tuple[float, ...]  # arc parameters where singular curves are crossed

    def outcome_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.runs:
            counts[r.outcome.value] = counts.get(r.outcome.value, 0) + 1
        return counts


def singular_crossings(
    g: Geometry, traj: JointTrajectory, samples: int = 600
) -> list[float]:
    """Arc parameters where the trajectory crosses the singular curves.

    Detected as changes of the direct-kinematics solution count, refined by
    bisection; tangential touches without a count change are not crossings.
    """
    ss = np.linspace(0.0, 1.0, samples + 1)
    counts = [len(solve_dk(g, traj.joint_at(s))) for s in ss]
    out = []
    for k in range(samples):
        if counts[k] == counts[k + 1]:
            continue
        lo, hi = ss[k], ss[k + 1]
        clo = counts[k]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            cmid = len(solve_dk(g, traj.joint_at(mid)))
            if cmid == clo:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return out


def classify_loop(
    g: Geometry, traj: JointTrajectory, cross_check: bool = False
) -> LoopClassification:
    """Run all 12 (start mode, direction) traces around a closed trajectory."""
    if not traj.closed:
        raise ValueError("classify_loop requires a closed trajectory")
    start_set = solve_dk(g, traj.joint_at(0.0))
    runs = []
    for direction, tr in ((1, traj), (-1, traj.reversed())):
        for idx, (pose, _) in enumerate(start_set.solutions):
            try:
                result = trace(g, tr, pose, start_set=start_set, cross_check=cross_check)
                runs.append(
                    LoopRun(
                        start_index=idx,
                        direction=direction,
                        outcome=result.outcome,
                        end_mode_index=result.end_mode_index,
                    )
                )
            except CorrectorDivergedError:
                runs.append(
                    LoopRun(
                        start_index=idx,
                        direction=direction,
                        outcome=Outcome.SINGULAR_STOP,
                        end_mode_index=None,
                    )
                )
    crossings = singular_crossings(g, traj)
    return LoopClassification(
        start_set=start_set, runs=tuple(runs), crossings=tuple(crossings)
    )


def enclosed_cusps(
    traj: JointTrajectory,
    cusps: list[CuspPoint],
    boundary_tol: float = BOUNDARY_TOL,
) -> list[tuple[CuspPoint, int]]:
    """Cusps the trajectory's joint-plane projection winds around."""
    pts = traj.waypoints
    if not traj.closed:
        if np.linalg.norm(pts[0] - pts[-1]) > 1e-9:
            raise ValueError(
                "open trajectory endpoints do not coincide in the joint plane"
            )
        pts = pts[:-1]
    out = []
    for c in cusps:
        w = winding_number(pts, c.joint_point(), boundary_tol=boundary_tol)
        if w != 0:
            out.append((c, w))
    return out
