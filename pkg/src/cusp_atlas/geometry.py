"""Planar 3-RPR manipulator model.

Conventions: the base frame is centered at the first anchor with the second
anchor on the positive x-axis.  Platform sides are d1 = |B1B2|, d2 = |B2B3|,
d3 = |B3B1|, with B3 on the left of ray B1->B2 (sin(beta) > 0).  Angles live
in (-pi, pi] and angular distances are measured on the circle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import DegenerateLegError

TOL_SING = 1e-9  # on S normalized by the base scale
MIN_LEG = 1e-9


def wrap_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    w = math.atan2(math.sin(a), math.cos(a))
    return math.pi if w <= -math.pi else w


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Array version of wrap_angle."""
    w = np.arctan2(np.sin(a), np.cos(a))
    return np.where(w <= -np.pi, np.pi, w)


def ang_dist(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    return abs(math.atan2(math.sin(a - b), math.cos(a - b)))


class Aspect(IntEnum):
    """Classification of a pose by the sign of the singularity function."""

    SINGULAR = 0
    ASPECT_1 = 1
    ASPECT_2 = 2


@dataclass(frozen=True)
class Geometry:
    """Base anchors and platform sides of one manipulator.

    sigma is the calibrated sign linking the scalar singularity function S
    to det(A): sign(det A) = sigma * sign(S).  It is fixed once per geometry
    by the calibration run and stored in the geometry file.
    """

    a2x: float
    a3x: float
    a3y: float
    d1: float
    d2: float
    d3: float
    sigma: int = -1
    beta: float = field(init=False, compare=False)

    def __post_init__(self):
        if self.a2x <= 0.0:
            raise ValueError("a2x must be positive (A2 on the positive x-axis)")
        d1, d2, d3 = self.d1, self.d2, self.d3
        if min(d1, d2, d3) <= 0.0:
            raise ValueError("platform sides must be positive")
        if not (d1 + d2 > d3 and d2 + d3 > d1 and d3 + d1 > d2):
            raise ValueError("platform sides violate the strict triangle inequality")
        if self.sigma not in (-1, 1):
            raise ValueError("sigma must be +1 or -1")
        cosb = (d1 * d1 + d3 * d3 - d2 * d2) / (2.0 * d1 * d3)
        object.__setattr__(self, "beta", math.acos(cosb))

    @property
    def a3(self) -> np.ndarray:
        return np.array([self.a3x, self.a3y])

    @property
    def scale(self) -> float:
        """Base length scale used to normalize the singularity function."""
        return self.a2x + math.hypot(self.a3x, self.a3y)

    def to_dict(self) -> dict:
        return {
            "a2x": self.a2x,
            "a3": [self.a3x, self.a3y],
            "d": [self.d1, self.d2, self.d3],
            "side_convention": "B1B2-B2B3-B3B1",
            "sigma": self.sigma,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Geometry":
        conv = data.get("side_convention", "B1B2-B2B3-B3B1")
        if conv != "B1B2-B2B3-B3B1":
            raise ValueError(f"unsupported side convention {conv!r}")
        a3 = data["a3"]
        d = data["d"]
        return cls(
            a2x=float(data["a2x"]),
            a3x=float(a3[0]),
            a3y=float(a3[1]),
            d1=float(d[0]),
            d2=float(d[1]),
            d3=float(d[2]),
            sigma=int(data.get("sigma", -1)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "Geometry":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Pose:
    """Platform configuration: cylindrical coordinates of B1 plus orientation."""

    rho1: float
    theta1: float
    alpha: float

    def __post_init__(self):
        if self.rho1 <= 0.0:
            raise ValueError("rho1 must be positive")
        object.__setattr__(self, "theta1", wrap_angle(self.theta1))
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))


@dataclass(frozen=True)
class JointVector:
    """Lengths of the three actuated prismatic joints."""

    rho1: float
    rho2: float
    rho3: float

    def __post_init__(self):
        if min(self.rho1, self.rho2, self.rho3) <= 0.0:
            raise ValueError("joint lengths must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.rho1, self.rho2, self.rho3])


@dataclass(frozen=True)
class JacobianPair:
    """The two velocity-model matrices: a_mat * t + b_mat * qdot = 0.

    a_mat columns are ordered (x, y, alpha) where (x, y) are the Cartesian
    coordinates of B1; b_mat is diag(-2 rho_i).
    """

    a_mat: np.ndarray
    b_mat: np.ndarray


def platform_points(g: Geometry, p: Pose) -> np.ndarray:
    """Return the platform vertices B1, B2, B3 as a (3, 2) array."""
    b1 = p.rho1 * np.array([math.cos(p.theta1), math.sin(p.theta1)])
    b2 = b1 + g.d1 * np.array([math.cos(p.alpha), math.sin(p.alpha)])
    ab = p.alpha + g.beta
    b3 = b1 + g.d3 * np.array([math.cos(ab), math.sin(ab)])
    return np.vstack([b1, b2, b3])


def leg_angles(g: Geometry, p: Pose) -> tuple[float, float, float]:
    """Directions of the three leg axes; raises DegenerateLegError on zero legs."""
    b = platform_points(g, p)
    v2 = b[1] - np.array([g.a2x, 0.0])
    v3 = b[2] - g.a3
    r2 = math.hypot(v2[0], v2[1])
    r3 = math.hypot(v3[0], v3[1])
    if r2 < MIN_LEG:
        raise DegenerateLegError(2)
    if r3 < MIN_LEG:
        raise DegenerateLegError(3)
    return p.theta1, math.atan2(v2[1], v2[0]), math.atan2(v3[1], v3[0])


def inverse_kinematics(g: Geometry, p: Pose) -> JointVector:
    """Closed-form leg lengths at a pose (single-valued; rho1 copied from pose)."""
    b = platform_points(g, p)
    rho2 = math.hypot(b[1, 0] - g.a2x, b[1, 1])
    rho3 = math.hypot(b[2, 0] - g.a3x, b[2, 1] - g.a3y)
    if rho2 < MIN_LEG:
        raise DegenerateLegError(2)
    if rho3 < MIN_LEG:
        raise DegenerateLegError(3)
    return JointVector(p.rho1, rho2, rho3)


def constraint_residual(g: Geometry, p: Pose, q: JointVector) -> np.ndarray:
    """The three constraint values f_i = |B_i - A_i|^2 - rho_i^2."""
    b = platform_points(g, p)
    f1 = p.rho1 * p.rho1 - q.rho1 * q.rho1
    f2 = (b[1, 0] - g.a2x) ** 2 + b[1, 1] ** 2 - q.rho2 * q.rho2
    f3 = (b[2, 0] - g.a3x) ** 2 + (b[2, 1] - g.a3y) ** 2 - q.rho3 * q.rho3
    return np.array([f1, f2, f3])


def constraint_residual_cartesian(
    g: Geometry, x: float, y: float, alpha: float, q: JointVector
) -> np.ndarray:
    """Constraint values with the pose given as Cartesian B1 plus orientation."""
    b2x = x + g.d1 * math.cos(alpha)
    b2y = y + g.d1 * math.sin(alpha)
    ab = alpha + g.beta
    b3x = x + g.d3 * math.cos(ab)
    b3y = y + g.d3 * math.sin(ab)
    return np.array(
        [
            x * x + y * y - q.rho1 * q.rho1,
            (b2x - g.a2x) ** 2 + b2y * b2y - q.rho2 * q.rho2,
            (b3x - g.a3x) ** 2 + (b3y - g.a3y) ** 2 - q.rho3 * q.rho3,
        ]
    )


def singularity_value(g: Geometry, p: Pose) -> float:
    """Scalar singularity function S of the pose.

    S = 0 exactly when the three leg axes are concurrent or parallel.  The
    sign of det(A) equals g.sigma * sign(S).
    """
    th1, th2, th3 = leg_angles(g, p)
    return g.a2x * math.sin(th2) * math.sin(th3 - th1) + (
        g.a3x * math.sin(th3) - g.a3y * math.cos(th3)
    ) * math.sin(th1 - th2)


def singularity_normalized(g: Geometry, p: Pose) -> float:
    """S divided by the base scale (makes tolerances unit-free)."""
    return singularity_value(g, p) / g.scale


def singularity_grid(
    g: Geometry, rho1: float, theta1: np.ndarray, alpha: np.ndarray
) -> np.ndarray:
    """Vectorized S over broadcastable theta1/alpha arrays at fixed rho1.

    Grid nodes with a zero-length leg produce NaN rather than raising.
    """
    th1 = np.asarray(theta1, dtype=float)
    al = np.asarray(alpha, dtype=float)
    b1x = rho1 * np.cos(th1)
    b1y = rho1 * np.sin(th1)
    v2x = b1x + g.d1 * np.cos(al) - g.a2x
    v2y = b1y + g.d1 * np.sin(al)
    ab = al + g.beta
    v3x = b1x + g.d3 * np.cos(ab) - g.a3x
    v3y = b1y + g.d3 * np.sin(ab) - g.a3y
    r2 = np.hypot(v2x, v2y)
    r3 = np.hypot(v3x, v3y)
    with np.errstate(invalid="ignore", divide="ignore"):
        th2 = np.arctan2(v2y, v2x)
        th3 = np.arctan2(v3y, v3x)
        s = g.a2x * np.sin(th2) * np.sin(th3 - th1) + (
            g.a3x * np.sin(th3) - g.a3y * np.cos(th3)
        ) * np.sin(th1 - th2)
    return np.where((r2 < MIN_LEG) | (r3 < MIN_LEG), np.nan, s)


def aspect_of(g: Geometry, p: Pose, tol_sing: float = TOL_SING) -> Aspect:
    """Label a pose by the calibrated sign of the singularity function.

    ASPECT_1 corresponds to det(A) > 0, which is sigma * S > 0.
    """
    s = g.sigma * singularity_normalized(g, p)
    if s > tol_sing:
        return Aspect.ASPECT_1
    if s < -tol_sing:
        return Aspect.ASPECT_2
    return Aspect.SINGULAR


def jacobian_pair(g: Geometry, p: Pose, q: JointVector) -> JacobianPair:
    """Constraint Jacobians with respect to the Cartesian pose and the joints."""
    b = platform_points(g, p)
    a2 = np.array([g.a2x, 0.0])
    ea = np.array([math.cos(p.alpha), math.sin(p.alpha)])
    ab = p.alpha + g.beta
    eab = np.array([math.cos(ab), math.sin(ab)])
    v2 = b[1] - a2
    v3 = b[2] - g.a3
    a_mat = np.array(
        [
            [2.0 * b[0, 0], 2.0 * b[0, 1], 0.0],
            [2.0 * v2[0], 2.0 * v2[1], 2.0 * g.d1 * (ea[0] * v2[1] - ea[1] * v2[0])],
            [2.0 * v3[0], 2.0 * v3[1], 2.0 * g.d3 * (eab[0] * v3[1] - eab[1] * v3[0])],
        ]
    )
    b_mat = np.diag([-2.0 * q.rho1, -2.0 * q.rho2, -2.0 * q.rho3])
    return JacobianPair(a_mat=a_mat, b_mat=b_mat)


def twist_from_joint_rates(
    g: Geometry, p: Pose, q: JointVector, qdot: np.ndarray
) -> np.ndarray:
    """Solve a_mat * t = -b_mat * qdot for the platform twist (xdot, ydot, alphadot)."""
    jp = jacobian_pair(g, p, q)
    return np.linalg.solve(jp.a_mat, -jp.b_mat @ np.asarray(qdot, dtype=float))


def leg_lines(g: Geometry, p: Pose) -> list[tuple[np.ndarray, np.ndarray]]:
    """The three leg axes as (anchor point, unit direction) pairs."""
    th1, th2, th3 = leg_angles(g, p)
    anchors = [np.zeros(2), np.array([g.a2x, 0.0]), g.a3.copy()]
    return [
        (anchors[i], np.array([math.cos(th), math.sin(th)]))
        for i, th in enumerate((th1, th2, th3))
    ]
