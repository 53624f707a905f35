"""Direct kinematics via the degree-6 characteristic polynomial.

Both distance constraints are affine in (cos(alpha), sin(alpha)) once theta1
is fixed, so alpha is eliminated by a 2x2 linear solve plus the Pythagorean
identity.  Under the half-angle substitution t = tan(theta1/2) the eliminant
is a degree-8 polynomial that is always divisible by (1 + t^2); the quotient
is the degree-6 characteristic polynomial whose real roots biject with the
assembly modes (theta1 = pi is checked separately since t misses it).

The same elimination works with the roles of theta1 and alpha swapped; that
route is the fallback when the primary 2x2 system is identically singular.

For a fixed (geometry, rho1) the eliminant coefficients are quadratic in
(u, v) = (rho2^2, rho3^2); the six basis polynomials of that expansion are
precomputed once per slice and reused by grid scans, the cusp finder, and
single solves alike.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EliminationSingularError, NearDiscriminantWarning
from .geometry import (
    Aspect,
    Geometry,
    JointVector,
    Pose,
    ang_dist,
    aspect_of,
    constraint_residual,
    wrap_angle,
)

DEDUP_TOL = 1e-6  # combined (theta1, alpha) angular metric
ROOT_CLUSTER_TOL = 1e-5  # theta1-scale gap below which counts are unreliable
REAL_IMAG_TOL = 1e-8  # |imag| < tol * (1 + |real|) counts as a real root
RESIDUAL_TOL = 1e-9  # absolute acceptance threshold on |f_i|
MAX_NEWTON = 30

_ONE_PLUS_T2 = np.array([1.0, 0.0, 1.0])  # ascending coefficients of 1 + t^2


@dataclass(frozen=True)
class CharPoly:
    """Characteristic polynomial in the half-angle of `variable`, ascending coeffs."""

    coeffs: np.ndarray  # shape (7,)
    joint: JointVector
    degree_drop: bool  # leading coefficient vanished; check variable = pi
    variable: str = "theta1"  # "theta1" (primary) or "alpha" (fallback route)

    def __call__(self, t: float) -> float:
        return float(np.polynomial.polynomial.polyval(t, self.coeffs))


@dataclass(frozen=True)
class SolutionSet:
    """All assembly modes at one joint vector, theta1-sorted."""

    joint: JointVector
    solutions: tuple[tuple[Pose, Aspect], ...]
    residual: float  # max |f_i| over all solutions
    near_discriminant: bool

    def __len__(self) -> int:
        return len(self.solutions)

    @property
    def poses(self) -> list[Pose]:
        return [p for p, _ in self.solutions]


def _theta_route_triples(g: Geometry, rho1: float):
    """(a, b, c) trig coefficients with theta1 as the polynomial variable.

    f2 = K2 + L2 cos(alpha) + M2 sin(alpha), f3 likewise, where each K, L, M
    is a + b cos(theta1) + c sin(theta1).  The joint-dependent parts -rho2^2
    and -rho3^2 of K2, K3 are left out; the basis handles them as -u, -v.
    """
    cb, sb = math.cos(g.beta), math.sin(g.beta)
    a3x, a3y = g.a3x, g.a3y
    k2 = (rho1 * rho1 + g.a2x * g.a2x + g.d1 * g.d1, -2.0 * rho1 * g.a2x, 0.0)
    l2 = (-2.0 * g.d1 * g.a2x, 2.0 * g.d1 * rho1, 0.0)
    m2 = (0.0, 0.0, 2.0 * g.d1 * rho1)
    k3 = (
        rho1 * rho1 + a3x * a3x + a3y * a3y + g.d3 * g.d3,
        -2.0 * rho1 * a3x,
        -2.0 * rho1 * a3y,
    )
    l3 = (
        -2.0 * g.d3 * (cb * a3x + sb * a3y),
        2.0 * g.d3 * rho1 * cb,
        2.0 * g.d3 * rho1 * sb,
    )
    m3 = (
        2.0 * g.d3 * (sb * a3x - cb * a3y),
        -2.0 * g.d3 * rho1 * sb,
        2.0 * g.d3 * rho1 * cb,
    )
    return k2, l2, m2, k3, l3, m3


def _alpha_route_triples(g: Geometry, rho1: float):
    """Swapped-role coefficients with alpha as the polynomial variable."""
    cb, sb = math.cos(g.beta), math.sin(g.beta)
    a3x, a3y = g.a3x, g.a3y
    k2 = (rho1 * rho1 + g.a2x * g.a2x + g.d1 * g.d1, -2.0 * g.d1 * g.a2x, 0.0)
    l2 = (-2.0 * rho1 * g.a2x, 2.0 * rho1 * g.d1, 0.0)
    m2 = (0.0, 0.0, 2.0 * rho1 * g.d1)
    k3 = (
        rho1 * rho1 + a3x * a3x + a3y * a3y + g.d3 * g.d3,
        -2.0 * g.d3 * (cb * a3x + sb * a3y),
        -2.0 * g.d3 * (cb * a3y - sb * a3x),
    )
    l3 = (-2.0 * rho1 * a3x, 2.0 * rho1 * g.d3 * cb, -2.0 * rho1 * g.d3 * sb)
    m3 = (-2.0 * rho1 * a3y, 2.0 * rho1 * g.d3 * sb, 2.0 * rho1 * g.d3 * cb)
    return k2, l2, m2, k3, l3, m3


def _half_angle(triple) -> np.ndarray:
    """Map a + b cos + c sin to its (1+t^2)-cleared quadratic in t."""
    a, b, c = triple
    return np.array([a + b, 2.0 * c, a - b])


def _deflate(p8: np.ndarray) -> np.ndarray:
    """Exact division of an ascending degree-8 polynomial by (1 + t^2)."""
    q, r = np.polydiv(p8[::-1], _ONE_PLUS_T2[::-1])
    scale = np.abs(p8).max()
    if scale > 0 and np.abs(r).max() > 1e-9 * scale:
        raise EliminationSingularError(
            "eliminant unexpectedly not divisible by (1 + t^2)"
        )
    return q[::-1]


@dataclass(frozen=True)
class SliceBasis:
    """Per-(geometry, rho1) expansion of the characteristic polynomial.

    coeffs(rho2, rho3) = sum_k m_k(u, v) * basis[k] with monomials
    (1, u, v, u^2, uv, v^2), u = rho2^2, v = rho3^2.  Each basis row is an
    ascending degree-6 coefficient vector in t = tan((variable - shift)/2);
    the shifted chart covers the neighborhood of theta1 = pi where the
    primary half-angle substitution blows up.
    """

    geometry: Geometry
    rho1: float
    basis: np.ndarray  # (6, 7)
    variable: str = "theta1"
    shift: float = 0.0

    def coeffs(self, rho2: float, rho3: float) -> np.ndarray:
        u, v = rho2 * rho2, rho3 * rho3
        m = np.array([1.0, u, v, u * u, u * v, v * v])
        return m @ self.basis

    def coeffs_du(self, rho2: float, rho3: float) -> np.ndarray:
        """d(coeffs)/d(rho2)."""
        u, v = rho2 * rho2, rho3 * rho3
        m = np.array([0.0, 1.0, 0.0, 2.0 * u, v, 0.0])
        return (m @ self.basis) * (2.0 * rho2)

    def coeffs_dv(self, rho2: float, rho3: float) -> np.ndarray:
        """d(coeffs)/d(rho3)."""
        u, v = rho2 * rho2, rho3 * rho3
        m = np.array([0.0, 0.0, 1.0, 0.0, u, 2.0 * v])
        return (m @ self.basis) * (2.0 * rho3)


def _eliminant_basis(triples) -> np.ndarray:
    """Six basis polynomials of the eliminant, deflated by (1 + t^2)."""
    k2, l2, m2, k3, l3, m3 = (_half_angle(t) for t in triples)
    w = _ONE_PLUS_T2
    conv = np.convolve
    # K2~ = k2 - u*w, K3~ = k3 - v*w; U, V are the adjugate solve numerators.
    u0 = conv(k3, m2) - conv(k2, m3)
    pu = conv(w, m3)
    pv = -conv(w, m2)
    v0 = conv(k2, l3) - conv(k3, l2)
    qu = -conv(w, l3)
    qv = conv(w, l2)
    dd = conv(l2, m3) - conv(m2, l3)
    if np.abs(dd).max() <= 1e-12 * max(np.abs(l2).max(), np.abs(m3).max(), 1.0) ** 2:
        raise EliminationSingularError(
            "2x2 elimination system is identically singular"
        )
    b0 = conv(u0, u0) + conv(v0, v0) - conv(dd, dd)
    b1 = 2.0 * (conv(u0, pu) + conv(v0, qu))
    b2 = 2.0 * (conv(u0, pv) + conv(v0, qv))
    b3 = conv(pu, pu) + conv(qu, qu)
    b4 = 2.0 * (conv(pu, pv) + conv(qu, qv))
    b5 = conv(pv, pv) + conv(qv, qv)
    return np.vstack([_deflate(p) for p in (b0, b1, b2, b3, b4, b5)])


@lru_cache(maxsize=64)
def slice_basis(g: Geometry, rho1: float) -> SliceBasis:
    """Primary-route basis (polynomial in tan(theta1/2)), cached per slice."""
    basis = _eliminant_basis(_theta_route_triples(g, rho1))
    return SliceBasis(geometry=g, rho1=rho1, basis=basis, variable="theta1")


@lru_cache(maxsize=64)
def slice_basis_shifted(g: Geometry, rho1: float) -> SliceBasis:
    """Basis in tan((theta1 - pi)/2): substituting theta1 = phi + pi negates
    the cos/sin coefficients of every trig-affine form."""
    shifted = [(a, -b, -c) for a, b, c in _theta_route_triples(g, rho1)]
    basis = _eliminant_basis(shifted)
    return SliceBasis(
        geometry=g, rho1=rho1, basis=basis, variable="theta1", shift=math.pi
    )


@lru_cache(maxsize=64)
def _alpha_slice_basis(g: Geometry, rho1: float) -> SliceBasis:
    """Fallback-route basis (polynomial in tan(alpha/2))."""
    basis = _eliminant_basis(_alpha_route_triples(g, rho1))
    return SliceBasis(geometry=g, rho1=rho1, basis=basis, variable="alpha")


def build_charpoly(g: Geometry, q: JointVector) -> CharPoly:
    """Characteristic polynomial of the direct kinematics at a joint vector."""
    try:
        sb = slice_basis(g, q.rho1)
    except EliminationSingularError:
        sb = _alpha_slice_basis(g, q.rho1)
    c = sb.coeffs(q.rho2, q.rho3)
    scale = np.abs(c).max()
    drop = scale == 0.0 or abs(c[6]) < 1e-12 * scale
    return CharPoly(coeffs=c, joint=q, degree_drop=bool(drop), variable=sb.variable)


def _recover_partner_angle(
    g: Geometry, q: JointVector, angle: float, variable: str
) -> float:
    """Solve the 2x2 linear system for the angle that was eliminated."""
    if variable == "theta1":
        triples = _theta_route_triples(g, q.rho1)
    else:
        triples = _alpha_route_triples(g, q.rho1)
    k2, l2, m2, k3, l3, m3 = triples
    ct, st = math.cos(angle), math.sin(angle)

    def ev(tr):
        return tr[0] + tr[1] * ct + tr[2] * st

    a11, a12 = ev(l2), ev(m2)
    a21, a22 = ev(l3), ev(m3)
    r1 = -(ev(k2) - q.rho2 * q.rho2)
    r2 = -(ev(k3) - q.rho3 * q.rho3)
    det = a11 * a22 - a12 * a21
    norm = abs(a11) + abs(a12) + abs(a21) + abs(a22)
    if abs(det) > 1e-10 * norm * norm:
        ca = (r1 * a22 - r2 * a12) / det
        sa = (a11 * r2 - a21 * r1) / det
    else:
        # tangent-circle case: least squares, then project onto the unit circle
        sol, *_ = np.linalg.lstsq(
            np.array([[a11, a12], [a21, a22]]), np.array([r1, r2]), rcond=None
        )
        ca, sa = sol
        h = math.hypot(ca, sa)
        if h > 0:
            ca, sa = ca / h, sa / h
    return math.atan2(sa, ca)


def newton_polish(
    g: Geometry, q: JointVector, theta1: float, alpha: float
) -> tuple[float, float, float]:
    """Newton on (f2, f3) in (theta1, alpha); returns theta1, alpha, residual."""
    rho1 = q.rho1
    a2x, a3x, a3y = g.a2x, g.a3x, g.a3y
    d1, d3, beta = g.d1, g.d3, g.beta
    u2, u3 = q.rho2 * q.rho2, q.rho3 * q.rho3
    tol = 5e-14 * max(1.0, u2, u3)
    th, al = theta1, alpha
    res = math.inf
    for _ in range(MAX_NEWTON):
        cth, sth = math.cos(th), math.sin(th)
        b1x, b1y = rho1 * cth, rho1 * sth
        ca, sa = math.cos(al), math.sin(al)
        cab, sab = math.cos(al + beta), math.sin(al + beta)
        v2x, v2y = b1x + d1 * ca - a2x, b1y + d1 * sa
        v3x, v3y = b1x + d3 * cab - a3x, b1y + d3 * sab - a3y
        f2 = v2x * v2x + v2y * v2y - u2
        f3 = v3x * v3x + v3y * v3y - u3
        res = max(abs(f2), abs(f3))
        if res < tol:
            break
        # rows: d f_i / d(theta1, alpha)
        j11 = 2.0 * rho1 * (cth * v2y - sth * v2x)
        j12 = 2.0 * d1 * (ca * v2y - sa * v2x)
        j21 = 2.0 * rho1 * (cth * v3y - sth * v3x)
        j22 = 2.0 * d3 * (cab * v3y - sab * v3x)
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            break
        dth = (-f2 * j22 + f3 * j12) / det
        dal = (-j11 * f3 + j21 * f2) / det
        step = math.hypot(dth, dal)
        if step > 0.5:  # keep Newton inside the basin
            dth *= 0.5 / step
            dal *= 0.5 / step
        th += dth
        al += dal
        if step < 1e-15:
            break
    return wrap_angle(th), wrap_angle(al), res


def solve_dk(
    g: Geometry,
    q: JointVector,
    dedup_tol: float = DEDUP_TOL,
    root_cluster_tol: float = ROOT_CLUSTER_TOL,
    warn: bool = False,
) -> SolutionSet:
    """All assembly modes at q: root extraction, polish, dedup, aspect labels."""
    cp = build_charpoly(g, q)
    scale = np.abs(cp.coeffs).max()
    candidates: list[tuple[float, float]] = []
    near = False
    if scale > 0.0:
        cn = cp.coeffs / scale
        roots = np.roots(cn[::-1])
        angles = []
        for r in roots:
            if abs(r.imag) < REAL_IMAG_TOL * (1.0 + abs(r.real)):
                angles.append(2.0 * math.atan(r.real))
            elif 2.0 * abs(r.imag) / (1.0 + abs(r) * abs(r)) < root_cluster_tol:
                near = True  # almost-real pair: too close to a double root
        # the half-angle substitution misses angle = pi; test it whenever the
        # leading coefficient collapses
        if cp.degree_drop:
            angles.append(math.pi)
        raw_gaps = [
            ang_dist(angles[i], angles[j])
            for i in range(len(angles))
            for j in range(i + 1, len(angles))
        ]
        if raw_gaps and min(raw_gaps) < root_cluster_tol:
            near = True
        for ang in angles:
            partner = _recover_partner_angle(g, q, ang, cp.variable)
            if cp.variable == "theta1":
                candidates.append((ang, partner))
            else:
                candidates.append((partner, ang))

    polished: list[tuple[float, float, float]] = []
    for th0, al0 in candidates:
        th, al, res = newton_polish(g, q, th0, al0)
        if res < RESIDUAL_TOL and ang_dist(th, th0) < 0.2:
            polished.append((th, al, res))

    # dedup on the wrapped (theta1, alpha) metric
    unique: list[tuple[float, float, float]] = []
    for th, al, res in sorted(polished):
        if all(
            math.hypot(ang_dist(th, th2), ang_dist(al, al2)) > dedup_tol
            for th2, al2, _ in unique
        ):
            unique.append((th, al, res))

    gaps = [
        ang_dist(unique[i][0], unique[j][0])
        for i in range(len(unique))
        for j in range(i + 1, len(unique))
    ]
    if gaps and min(gaps) < root_cluster_tol:
        near = True
    if near and warn:
        warnings.warn(
            f"solution count near q={q} is unreliable (close roots)",
            NearDiscriminantWarning,
            stacklevel=2,
        )

    sols = []
    worst = 0.0
    for th, al, _ in unique:
        pose = Pose(q.rho1, th, al)
        sols.append((pose, aspect_of(g, pose)))
        worst = max(worst, float(np.abs(constraint_residual(g, pose, q)).max()))
    return SolutionSet(
        joint=q,
        solutions=tuple(sols),
        residual=worst,
        near_discriminant=near,
    )


def solutions_in_aspect(s: SolutionSet, a: Aspect) -> list[Pose]:
    """Poses of one aspect, theta1-sorted ascending."""
    return sorted((p for p, lab in s.solutions if lab == a), key=lambda p: p.theta1)
