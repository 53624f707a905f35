"""Cusp points of a fixed-rho1 joint-space slice.

A cusp is a joint vector where the characteristic polynomial has a triple
root: three assembly modes coincide.  The double-root locus
{P = 0, dP/dt = 0} in (t, rho2, rho3) is one-dimensional; every singular
pose lies on it, so the workspace contour supplies seeds.  The locus is
traced by pseudo-arclength continuation while monitoring d2P/dt2, whose
sign changes bracket the cusps; each bracket is polished by a three-equation
Newton on {P = P' = P'' = 0}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .atlas import WorkspaceContour, workspace_singular_contour
from .dk import SliceBasis, slice_basis, slice_basis_shifted, solve_dk
from .errors import DegenerateLegError, OnBoundaryError
from .geometry import Geometry, JointVector, Pose, ang_dist, inverse_kinematics, wrap_angle
from .winding import BOUNDARY_TOL, winding_number

log = logging.getLogger(__name__)

# position conditioning at a triple root is cubic along the wedge axis:
# residuals ~ 1e-12 only pin the point to ~2e-4, so duplicates from separate
# brackets must merge well above that; genuine cusp pairs sit >> 1e-2 apart
CUSP_MERGE_TOL = 1e-3  # in (rho2, rho3)
MULT_GAP_TOL = 1e-6  # lower bound on |P'''| (normalized) at a genuine cusp
RESIDUAL_CERT_TOL = 1e-8
STEP_INIT = 1e-2
STEP_MIN = 1e-6
STEP_MAX = 0.1


@dataclass(frozen=True)
class CuspPoint:
    """A triple-root point of the slice, with its refinement certificates."""

    rho1: float
    rho2: float
    rho3: float
    t_triple: float
    theta1: float
    residuals: tuple[float, float, float]  # |P|, |P'|, |P''| (normalized coeffs)
    third_derivative: float  # |P'''| (normalized), the multiplicity gap
    degenerate: bool  # True when |P'''| falls below the gap tolerance

    def joint_point(self) -> np.ndarray:
        return np.array([self.rho2, self.rho3])


class _LocusSystem:
    """P and its t-derivatives / joint partials on one slice."""

    def __init__(self, basis: SliceBasis):
        self.basis = basis

    def _coeff_stack(self, rho2: float, rho3: float):
        c = self.basis.coeffs(rho2, rho3)
        cu = self.basis.coeffs_du(rho2, rho3)
        cv = self.basis.coeffs_dv(rho2, rho3)
        return c, cu, cv

    def residuals(self, x: np.ndarray, orders: int = 3) -> np.ndarray:
        """Normalized (P, P', P'', ...) at x = (t, rho2, rho3)."""
        t, r2, r3 = x
        c = self.basis.coeffs(r2, r3)
        scale = np.abs(c).max()
        c = c / scale if scale > 0 else c
        out = []
        for _ in range(orders + 1):
            out.append(npoly.polyval(t, c))
            c = npoly.polyder(c)
        return np.array(out)

    def system(self, x: np.ndarray, n_eq: int):
        """Values and Jacobian rows of (P, P', ..., P^(n_eq-1)) wrt (t, rho2, rho3)."""
        t, r2, r3 = x
        c, cu, cv = self._coeff_stack(r2, r3)
        scale = np.abs(c).max()
        if scale > 0:
            c, cu, cv = c / scale, cu / scale, cv / scale
        vals = np.empty(n_eq)
        jac = np.empty((n_eq, 3))
        for k in range(n_eq):
            vals[k] = npoly.polyval(t, c)
            jac[k, 0] = npoly.polyval(t, npoly.polyder(c))
            jac[k, 1] = npoly.polyval(t, cu)
            jac[k, 2] = npoly.polyval(t, cv)
            c = npoly.polyder(c)
            cu = npoly.polyder(cu)
            cv = npoly.polyder(cv)
        return vals, jac


def _gauss_newton_onto_locus(sys: _LocusSystem, x0: np.ndarray, iters: int = 20):
    """Least-norm correction onto {P = P' = 0} from a nearby seed."""
    x = x0.copy()
    for _ in range(iters):
        vals, jac = sys.system(x, 2)
        if np.abs(vals).max() < 1e-12:
            return x
        dx, *_ = np.linalg.lstsq(jac, -vals, rcond=None)
        if np.linalg.norm(dx) > 1.0:
            dx *= 1.0 / np.linalg.norm(dx)
        x = x + dx
    vals, _ = sys.system(x, 2)
    return x if np.abs(vals).max() < 1e-9 else None


def _corrector(sys: _LocusSystem, x_pred: np.ndarray, tangent: np.ndarray):
    """Newton on {P = 0, P' = 0, tangent . (x - x_pred) = 0}."""
    x = x_pred.copy()
    for _ in range(10):
        vals, jac = sys.system(x, 2)
        aug_vals = np.array([vals[0], vals[1], tangent @ (x - x_pred)])
        if np.abs(aug_vals).max() < 1e-11:
            return x
        aug_jac = np.vstack([jac, tangent])
        try:
            dx = np.linalg.solve(aug_jac, -aug_vals)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        if np.linalg.norm(dx) < 1e-14:
            break
    vals, _ = sys.system(x, 2)
    return x if np.abs(vals).max() < 1e-10 else None


def _tangent(sys: _LocusSystem, x: np.ndarray, prev: np.ndarray | None):
    _, jac = sys.system(x, 2)
    tau = np.cross(jac[0], jac[1])
    norm = np.linalg.norm(tau)
    if norm < 1e-14:
        return None
    tau = tau / norm
    if prev is not None and tau @ prev < 0.0:
        tau = -tau
    return tau


def _bisect_candidate(
    sys: _LocusSystem, xa: np.ndarray, xb: np.ndarray, tau: np.ndarray
):
    """Shrink a P'' sign-change bracket along the locus by corrected midpoints."""
    fa = sys.residuals(xa)[2]
    for _ in range(50):
        if np.linalg.norm(xb - xa) < 1e-10:
            break
        xm = _corrector(sys, 0.5 * (xa + xb), tau)
        if xm is None:
            break
        fm = sys.residuals(xm)[2]
        if fm == 0.0:
            return xm
        if (fm > 0.0) == (fa > 0.0):
            xa, fa = xm, fm
        else:
            xb = xm
    return 0.5 * (xa + xb)


def _refine_cusp(sys: _LocusSystem, x0: np.ndarray):
    """Full Newton on {P = P' = P'' = 0}; None when it does not converge."""
    x = x0.copy()
    for _ in range(40):
        vals, jac = sys.system(x, 3)
        if np.abs(vals).max() < 1e-12:
            break
        try:
            dx = np.linalg.solve(jac, -vals)
        except np.linalg.LinAlgError:
            return None
        n = np.linalg.norm(dx)
        if n > 0.5:
            dx *= 0.5 / n
        x = x + dx
    vals, _ = sys.system(x, 3)
    return x if np.abs(vals).max() < RESIDUAL_CERT_TOL else None


def _chart_theta(x: np.ndarray, shift: float) -> float:
    return wrap_angle(2.0 * math.atan(x[0]) + shift)


def find_cusps(
    g: Geometry,
    rho1: float,
    contour: WorkspaceContour | None = None,
    grid_n: int = 512,
    max_steps: int = 40000,
) -> list[CuspPoint]:
    """All cusp points of the rho1 slice, deduplicated and certified.

    The double-root locus is traced in two half-angle charts (centered at
    theta1 = 0 and theta1 = pi) so the pole of either substitution is
    covered by the other.  Returns an empty list when the slice has no
    singular curve to seed from.
    """
    if contour is None:
        contour = workspace_singular_contour(g, rho1, grid_n=grid_n)
    if not contour.polylines:
        log.warning("no singular contour at rho1=%g: no cusp seeds", rho1)
        return []
    charts = (
        _LocusSystem(slice_basis(g, rho1)),
        _LocusSystem(slice_basis_shifted(g, rho1)),
    )

    # coverage marks live in chart-independent (theta1, rho2, rho3) space
    visited: list[np.ndarray] = []
    candidates: list[tuple[int, np.ndarray]] = []
    cover_radius = 0.05

    def mark(x: np.ndarray, shift: float) -> None:
        visited.append(np.array([_chart_theta(x, shift), x[1], x[2]]))

    def is_covered(x: np.ndarray, shift: float) -> bool:
        th = _chart_theta(x, shift)
        for v in visited:
            if (
                math.hypot(
                    ang_dist(th, v[0]), math.hypot(x[1] - v[1], x[2] - v[2])
                )
                < cover_radius
            ):
                return True
        return False

    for chart_idx, sys in enumerate(charts):
        shift = sys.basis.shift
        seeds = []
        for pl in contour.polylines:
            stride = max(1, len(pl.vertices) // 8)
            for k in range(0, len(pl.vertices), stride):
                alpha, theta1 = pl.vertices[k]
                if abs(math.cos((theta1 - shift) / 2.0)) < 0.15:
                    continue  # too close to this chart's pole
                try:
                    q = inverse_kinematics(g, Pose(rho1, theta1, alpha))
                except DegenerateLegError:
                    continue
                seeds.append(
                    np.array([math.tan((theta1 - shift) / 2.0), q.rho2, q.rho3])
                )

        for seed in seeds:
            x = _gauss_newton_onto_locus(sys, seed)
            if x is None or is_covered(x, shift):
                continue
            for direction in (1.0, -1.0):
                xk = x.copy()
                tau = _tangent(sys, xk, None)
                if tau is None:
                    continue
                tau = tau * direction
                h = STEP_INIT
                f2_prev = sys.residuals(xk)[2]
                arclen = 0.0
                for _ in range(max_steps):
                    xn = None
                    while h >= STEP_MIN:
                        xn = _corrector(sys, xk + h * tau, tau)
                        if xn is not None:
                            break
                        h *= 0.5
                    if xn is None:
                        break
                    arclen += h
                    mark(xn, shift)
                    f2 = sys.residuals(xn)[2]
                    if f2 == 0.0 or (f2 > 0.0) != (f2_prev > 0.0):
                        candidates.append(
                            (chart_idx, _bisect_candidate(sys, xk, xn, tau))
                        )
                    f2_prev = f2
                    tau_n = _tangent(sys, xn, tau)
                    if tau_n is None:
                        break
                    xk, tau = xn, tau_n
                    h = min(h * 1.4, STEP_MAX)
                    # chart bounds and closure
                    if abs(xk[0]) > 20.0 or xk[1] <= 0.05 or xk[2] <= 0.05:
                        break
                    if arclen > 10.0 * STEP_INIT and np.linalg.norm(xk - x) < h:
                        break

    cusps: list[CuspPoint] = []
    for chart_idx, cand in candidates:
        sys = charts[chart_idx]
        shift = sys.basis.shift
        x = _refine_cusp(sys, cand)
        if x is None:
            log.warning("cusp candidate near %s did not converge; excluded", cand)
            continue
        t, r2, r3 = x
        if r2 <= 0.0 or r3 <= 0.0:
            continue
        if any(
            math.hypot(c.rho2 - r2, c.rho3 - r3) < CUSP_MERGE_TOL for c in cusps
        ):
            continue
        theta1 = _chart_theta(x, shift)
        res = sys.residuals(x, orders=3)
        third = abs(res[3])
        cusps.append(
            CuspPoint(
                rho1=rho1,
                rho2=float(r2),
                rho3=float(r3),
                t_triple=math.tan(theta1 / 2.0),
                theta1=theta1,
                residuals=(abs(res[0]), abs(res[1]), abs(res[2])),
                third_derivative=third,
                degenerate=bool(third < MULT_GAP_TOL),
            )
        )
    cusps.sort(key=lambda c: (c.rho2, c.rho3))
    return cusps


def coalescing_solutions(g: Geometry, cusp: CuspPoint, eps: float = 1e-2):
    """The three solutions that merge at the cusp, sampled just inside the wedge.

    The wedge axis comes from the local cubic normal form: pick the joint
    offset that zeroes the constant term and makes the linear coefficient
    negative.  Returns the (Pose, Aspect) trio, or None when the probe fails.
    """
    if abs(math.cos(cusp.theta1 / 2.0)) > 0.2:
        sys = _LocusSystem(slice_basis(g, cusp.rho1))
        t_chart = math.tan(cusp.theta1 / 2.0)
    else:
        sys = _LocusSystem(slice_basis_shifted(g, cusp.rho1))
        t_chart = math.tan((cusp.theta1 - math.pi) / 2.0)
    x = np.array([t_chart, cusp.rho2, cusp.rho3])
    _, jac = sys.system(x, 2)
    p3 = sys.residuals(x, orders=3)[3]
    try:
        dq = np.linalg.solve(
            np.array([jac[0, 1:], jac[1, 1:]]), np.array([0.0, -p3 / 6.0])
        )
    except np.linalg.LinAlgError:
        return None
    nrm = np.linalg.norm(dq)
    if nrm == 0.0:
        return None
    dq /= nrm
    for e in (eps, eps / 3.0, eps * 3.0, eps / 10.0):
        for sgn in (1.0, -1.0):
            r2 = cusp.rho2 + sgn * e * dq[0]
            r3 = cusp.rho3 + sgn * e * dq[1]
            if r2 <= 0.0 or r3 <= 0.0:
                continue
            ss = solve_dk(g, JointVector(cusp.rho1, r2, r3))
            near = [
                (p, a)
                for p, a in ss.solutions
                if ang_dist(p.theta1, cusp.theta1) < 4.0 * (e ** (1.0 / 3.0))
            ]
            if len(near) == 3:
                return near
    return None


def cusps_in_region(
    cusps: list[CuspPoint],
    polygon: np.ndarray,
    boundary_tol: float = BOUNDARY_TOL,
) -> list[CuspPoint]:
    """Cusps with nonzero winding number of the closed polygon around them.

    Raises OnBoundaryError when a cusp lies on the polygon itself (the
    enclosure question is ambiguous there).
    """
    enclosed = []
    for c in cusps:
        try:
            w = winding_number(polygon, c.joint_point(), boundary_tol=boundary_tol)
        except OnBoundaryError as exc:
            raise OnBoundaryError(
                f"cusp at ({c.rho2:.6f}, {c.rho3:.6f}) lies on the region boundary"
            ) from exc
        if w != 0:
            enclosed.append(c)
    return enclosed
