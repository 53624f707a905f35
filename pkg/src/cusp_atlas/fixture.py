"""Canonical test manipulator and the calibrated reference scenario.

The canonical geometry ships as a frozen JSON file produced by `calibrate`:
the side-assignment convention and the sign sigma linking S to det(A) were
fixed by requiring six direct-kinematics solutions at the reference joint
vector, split 3/3 across the aspects.

`reference_triangle` builds the triangular loop used by the motion tests: a
triangle through the reference joint vector encircling exactly one cusp,
crossing the singular curves four times, whose twelve traced motions fall
into the 8 / 2 / 2 stop / loop / mode-change pattern (loops from one
aspect-2 mode, changes between one aspect-1 pair).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .cusps import CuspPoint, coalescing_solutions, find_cusps
from .dk import solve_dk, solutions_in_aspect
from .errors import CorrectorDivergedError
from .geometry import Aspect, Geometry, JointVector
from .motion import (
    JointTrajectory,
    LoopClassification,
    Outcome,
    classify_loop,
    enclosed_cusps,
    singular_crossings,
    trace,
)

REFERENCE_RHO1 = 17.0
REFERENCE_JOINT = (17.0, 19.0, 17.0)
# covers the whole cusp neighborhood: paths encircling the outer cusps
# (rho ~ 32) need room beyond the central 6-solution region
REFERENCE_WINDOW = ((5.0, 38.0), (5.0, 38.0))


def canonical_geometry() -> Geometry:
    """The frozen study manipulator."""
    path = resources.files("cusp_atlas.data").joinpath("canonical.json")
    return Geometry.from_dict(json.loads(path.read_text()))


def reference_joint() -> JointVector:
    return JointVector(*REFERENCE_JOINT)


def calibrate(
    a2x: float = 15.91,
    a3: tuple[float, float] = (0.0, 10.0),
    sides: tuple[float, float, float] = (17.04, 16.54, 20.84),
) -> Geometry:
    """Fix the side convention and sigma for a raw parameter set.

    Tries the documented side order first, then its permutations, until the
    reference joint vector yields 6 solutions split 3/3 across aspects;
    sigma is chosen so labels match the det(A) > 0 definition of aspect 1.
    """
    q = reference_joint()
    for perm in itertools.permutations(sides):
        try:
            g = Geometry(
                a2x=a2x, a3x=a3[0], a3y=a3[1], d1=perm[0], d2=perm[1], d3=perm[2]
            )
        except ValueError:
            continue
        ss = solve_dk(g, q)
        n1 = len(solutions_in_aspect(ss, Aspect.ASPECT_1))
        n2 = len(solutions_in_aspect(ss, Aspect.ASPECT_2))
        if len(ss) == 6 and n1 == 3 and n2 == 3:
            return g
    raise RuntimeError("no side assignment yields the calibrated 6-solution split")


def nearest_cusp(cusps: list[CuspPoint], point) -> CuspPoint:
    p = np.asarray(point, dtype=float)
    return min(cusps, key=lambda c: float(np.linalg.norm(c.joint_point() - p)))


def cusp_pair_aspect(g: Geometry, cusp: CuspPoint) -> Aspect | None:
    """Aspect of the two same-aspect sheets a cusp links (2+1 trio majority)."""
    trio = coalescing_solutions(g, cusp)
    if trio is None:
        return None
    labels = [a for _, a in trio]
    for a in (Aspect.ASPECT_1, Aspect.ASPECT_2):
        if labels.count(a) == 2:
            return a
    return None


def _triangle_through(q_point: np.ndarray, center: np.ndarray, scale: float, phi: float) -> np.ndarray:
    """Triangle with one vertex at q; the others are scaled rotations about center."""
    w = q_point - center
    verts = [q_point]
    for k in (1, 2):
        a = 2.0 * math.pi * k / 3.0 + phi
        c, s = math.cos(a), math.sin(a)
        verts.append(
            center + scale * np.array([c * w[0] - s * w[1], s * w[0] + c * w[1]])
        )
    return np.array(verts)


def _matches_reference_pattern(cls: LoopClassification) -> bool:
    counts = cls.outcome_counts()
    if (
        counts.get(Outcome.SINGULAR_STOP.value, 0) != 8
        or counts.get(Outcome.LOOP_SAME_MODE.value, 0) != 2
        or counts.get(Outcome.MODE_CHANGE.value, 0) != 2
    ):
        return False
    loops = [r for r in cls.runs if r.outcome == Outcome.LOOP_SAME_MODE]
    changes = [r for r in cls.runs if r.outcome == Outcome.MODE_CHANGE]
    if loops[0].start_index != loops[1].start_index:
        return False
    if cls.start_set.solutions[loops[0].start_index][1] != Aspect.ASPECT_2:
        return False
    a, b = changes
    if {a.direction, b.direction} != {1, -1}:
        return False
    if a.start_index != b.end_mode_index or b.start_index != a.end_mode_index:
        return False
    return all(
        cls.start_set.solutions[r.start_index][1] == Aspect.ASPECT_1 for r in changes
    )


@dataclass(frozen=True)
class ReferenceLoop:
    trajectory: JointTrajectory
    cusp: CuspPoint
    classification: LoopClassification


def cusp_mode_linkage(
    g: Geometry,
    cusp: CuspPoint,
    cusps: list[CuspPoint],
    joint: JointVector | None = None,
) -> tuple[int, int] | None:
    """Which two modes at the reference joint a cusp links.

    Builds a loop through the joint point winding around this cusp alone and
    traces every same-aspect mode around it; the pair that exchanges is the
    pair the cusp connects.  Returns None if no suitable loop is found.
    """
    joint = joint or reference_joint()
    pair_aspect = cusp_pair_aspect(g, cusp)
    if pair_aspect is None:
        return None
    solset = solve_dk(g, joint)
    q_point = np.array([joint.rho2, joint.rho3])
    center = cusp.joint_point()
    for scale in (0.4, 0.6, 0.8, 1.0, 0.3, 1.3):
        for phi in (0.0, -0.5, 0.5, 1.0, -1.0):
            verts = _triangle_through(q_point, center, scale, phi)
            if verts.min() <= 0.5:
                continue
            traj = JointTrajectory(rho1=joint.rho1, waypoints=verts, closed=True)
            try:
                enclosed = enclosed_cusps(traj, cusps)
            except Exception:
                continue
            if len(enclosed) != 1 or enclosed[0][0] is not cusp:
                continue
            changes = set()
            for idx, (pose, aspect) in enumerate(solset.solutions):
                if aspect != pair_aspect:
                    continue
                for tr in (traj, traj.reversed()):
                    try:
                        res = trace(g, tr, pose, start_set=solset, cross_check=False)
                    except CorrectorDivergedError:
                        continue
                    if res.outcome == Outcome.MODE_CHANGE:
                        changes.add(frozenset((idx, res.end_mode_index)))
            if len(changes) == 1:
                pair = tuple(sorted(next(iter(changes))))
                return pair[0], pair[1]
    return None


def aspect1_mode_chain(
    g: Geometry,
    cusps: list[CuspPoint] | None = None,
    joint: JointVector | None = None,
) -> tuple[int, int, int, dict[tuple[int, int], CuspPoint]]:
    """The adjacency chain (end, middle, end) of the three aspect-1 modes.

    Each aspect-1 cusp links one mode pair; the mode common to both pairs is
    the intermediate layer.  Connecting the two chain ends is exactly the
    motion that must encircle both cusps.  Also returns pair -> cusp.
    """
    joint = joint or reference_joint()
    if cusps is None:
        cusps = find_cusps(g, joint.rho1)
    links: dict[tuple[int, int], CuspPoint] = {}
    for c in cusps:
        if cusp_pair_aspect(g, c) != Aspect.ASPECT_1:
            continue
        pair = cusp_mode_linkage(g, c, cusps, joint)
        if pair is not None:
            links[pair] = c
    if len(links) != 2:
        raise RuntimeError(f"expected two aspect-1 cusp linkages, found {len(links)}")
    (a1, b1), (a2, b2) = links.keys()
    shared = set((a1, b1)) & set((a2, b2))
    if len(shared) != 1:
        raise RuntimeError("aspect-1 cusp linkages do not form a chain")
    middle = shared.pop()
    ends = sorted(set((a1, b1, a2, b2)) - {middle})
    return ends[0], middle, ends[1], links


def reference_triangle(
    g: Geometry,
    cusps: list[CuspPoint] | None = None,
    joint: JointVector | None = None,
) -> ReferenceLoop:
    """The calibrated loop of the reference scenario.

    Searches cusps (those linking two aspect-1 sheets first, then by joint
    distance) and triangle shapes until the loop crosses the singular curves
    at exactly four parameters, winds once around that cusp alone, and the
    twelve traces realize the 8 / 2 / 2 pattern.
    """
    joint = joint or reference_joint()
    if cusps is None:
        cusps = find_cusps(g, joint.rho1)
    q_point = np.array([joint.rho2, joint.rho3])

    def sort_key(c: CuspPoint):
        pair = cusp_pair_aspect(g, c)
        return (0 if pair == Aspect.ASPECT_1 else 1, float(np.linalg.norm(c.joint_point() - q_point)))

    for cusp in sorted(cusps, key=sort_key):
        center = cusp.joint_point()
        for scale in (0.5, 0.7, 0.4, 0.6, 0.8, 1.0, 1.2):
            for phi in (-0.5, 0.0, 0.5, -1.0, 1.0):
                verts = _triangle_through(q_point, center, scale, phi)
                if verts.min() <= 0.5:
                    continue
                traj = JointTrajectory(rho1=joint.rho1, waypoints=verts, closed=True)
                try:
                    enclosed = enclosed_cusps(traj, cusps)
                except Exception:
                    continue
                if len(enclosed) != 1 or enclosed[0][0] is not cusp:
                    continue
                if abs(enclosed[0][1]) != 1:
                    continue
                if len(singular_crossings(g, traj)) != 4:
                    continue
                cls = classify_loop(g, traj)
                if _matches_reference_pattern(cls):
                    return ReferenceLoop(trajectory=traj, cusp=cusp, classification=cls)
    raise RuntimeError("no triangle realizes the reference 8/2/2 loop pattern")
