"""Continuation engine: traces, loop taxonomy, winding, enclosure."""

import math

import numpy as np
import pytest

from cusp_atlas.dk import solve_dk
from cusp_atlas.errors import OnBoundaryError, StartInconsistentError
from cusp_atlas.geometry import (
    Aspect,
    JointVector,
    Pose,
    ang_dist,
    constraint_residual,
    singularity_value,
)
from cusp_atlas.motion import (
    JointTrajectory,
    Outcome,
    classify_loop,
    enclosed_cusps,
    singular_crossings,
    trace,
    winding_number,
    _det2_at,
)


def test_winding_unit_square():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert winding_number(square, (0.5, 0.5)) == 1
    assert winding_number(square[::-1], (0.5, 0.5)) == -1
    assert winding_number(square, (2.0, 2.0)) == 0


def test_winding_figure_eight_cancels():
    lobe1 = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]  # ccw around (.5,.5)
    lobe2 = [[0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [0.0, 0.0]]  # cw around (.5,.5)
    eight = np.array(lobe1 + lobe2)
    assert winding_number(eight, (0.5, 0.5)) == 0


def test_winding_on_boundary_raises():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(OnBoundaryError):
        winding_number(square, (0.5, 0.0))


def test_trace_requires_consistent_start(geom, ref_solutions):
    traj = JointTrajectory(
        rho1=17.0, waypoints=np.array([[19.0, 17.0], [20.0, 18.0]]), closed=False
    )
    with pytest.raises(StartInconsistentError):
        trace(geom, traj, Pose(17.0, 0.3, 0.3), start_set=ref_solutions)


def test_trace_samples_satisfy_constraints(geom, ref_solutions):
    traj = JointTrajectory(
        rho1=17.0,
        waypoints=np.array([[19.0, 17.0], [21.0, 18.5], [20.0, 20.0]]),
        closed=False,
    )
    start = ref_solutions.solutions[0][0]
    result = trace(geom, traj, start, start_set=ref_solutions)
    assert result.outcome == Outcome.OPEN_END
    for s, r2, r3, th, al, sv in result.samples:
        q = JointVector(17.0, r2, r3)
        res = np.abs(constraint_residual(geom, Pose(17.0, th, al), q)).max()
        assert res < 1e-9
        assert sv == pytest.approx(
            singularity_value(geom, Pose(17.0, th, al)), rel=1e-9, abs=1e-12
        )
    # aspect-sign constancy along the non-singular trace
    signs = {np.sign(sv) for *_, sv in result.samples if abs(sv) / geom.scale > 1e-9}
    assert len(signs) == 1


def test_small_loop_all_same_mode(geom, ref_solutions, cusps17):
    # a contractible loop: no crossings, no enclosed cusps
    angles = np.linspace(0.0, 2.0 * math.pi, 7)[:-1]
    loop = np.array([[19.0 + 0.25 * math.cos(a), 17.0 + 0.25 * math.sin(a)] for a in angles])
    traj = JointTrajectory(rho1=17.0, waypoints=loop, closed=True)
    assert singular_crossings(geom, traj, samples=200) == []
    assert enclosed_cusps(traj, cusps17) == []
    cls = classify_loop(geom, traj)
    assert cls.outcome_counts() == {Outcome.LOOP_SAME_MODE.value: 12}


def test_reference_loop_taxonomy(geom, ref_loop):
    counts = ref_loop.classification.outcome_counts()
    assert counts[Outcome.SINGULAR_STOP.value] == 8
    assert counts[Outcome.LOOP_SAME_MODE.value] == 2
    assert counts[Outcome.MODE_CHANGE.value] == 2
    assert len(ref_loop.classification.crossings) == 4


def test_reference_loop_pattern_details(geom, ref_loop):
    cls = ref_loop.classification
    loops = [r for r in cls.runs if r.outcome == Outcome.LOOP_SAME_MODE]
    changes = [r for r in cls.runs if r.outcome == Outcome.MODE_CHANGE]
    # both full loops start from one and the same aspect-2 solution
    assert loops[0].start_index == loops[1].start_index
    assert {r.direction for r in loops} == {1, -1}
    assert cls.start_set.solutions[loops[0].start_index][1] == Aspect.ASPECT_2
    # the mode changes connect one aspect-1 pair in opposite directions
    a, b = changes
    assert a.start_index == b.end_mode_index and b.start_index == a.end_mode_index
    assert {r.direction for r in changes} == {1, -1}
    for r in changes:
        assert cls.start_set.solutions[r.start_index][1] == Aspect.ASPECT_1


def test_mode_change_reversibility(geom, ref_loop, ref_solutions):
    cls = ref_loop.classification
    change = next(r for r in cls.runs if r.outcome == Outcome.MODE_CHANGE)
    traj = (
        ref_loop.trajectory
        if change.direction == 1
        else ref_loop.trajectory.reversed()
    )
    fwd = trace(
        geom, traj, cls.start_set.solutions[change.start_index][0], start_set=cls.start_set
    )
    assert fwd.end_mode_index == change.end_mode_index
    back = trace(
        geom,
        traj.reversed(),
        cls.start_set.solutions[fwd.end_mode_index][0],
        start_set=cls.start_set,
    )
    assert back.outcome == Outcome.MODE_CHANGE
    assert back.end_mode_index == change.start_index


def test_singular_stop_pose_is_singular(geom, ref_loop):
    cls = ref_loop.classification
    stop_run = next(r for r in cls.runs if r.outcome == Outcome.SINGULAR_STOP)
    traj = (
        ref_loop.trajectory
        if stop_run.direction == 1
        else ref_loop.trajectory.reversed()
    )
    result = trace(
        geom,
        traj,
        cls.start_set.solutions[stop_run.start_index][0],
        start_set=cls.start_set,
    )
    assert result.outcome == Outcome.SINGULAR_STOP
    assert result.stop_pose is not None
    assert abs(singularity_value(geom, result.stop_pose)) / geom.scale < 1e-5


def test_corrector_determinant_sign_matches_singularity(geom):
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 200:
        th = rng.uniform(-math.pi, math.pi)
        al = rng.uniform(-math.pi, math.pi)
        p = Pose(17.0, th, al)
        try:
            from cusp_atlas.geometry import inverse_kinematics

            q = inverse_kinematics(geom, p)
            s = singularity_value(geom, p)
        except Exception:
            continue
        if abs(s) / geom.scale < 1e-6:
            continue
        det = _det2_at(geom, 17.0, q.rho2, q.rho3, th, al)
        # det2 = det(A) / (2 rho1 * norms): same sign as sigma * S
        assert np.sign(det) == np.sign(geom.sigma * s)
        checked += 1


def test_traced_states_match_dk_solutions(geom, ref_solutions):
    traj = JointTrajectory(
        rho1=17.0,
        waypoints=np.array([[19.0, 17.0], [22.0, 19.0]]),
        closed=False,
    )
    result = trace(
        geom, traj, ref_solutions.solutions[2][0], start_set=ref_solutions, cross_check=True
    )
    for s, r2, r3, th, al, _ in result.samples[1:]:
        ss = solve_dk(geom, JointVector(17.0, r2, r3))
        d = min(
            math.hypot(ang_dist(th, p.theta1), ang_dist(al, p.alpha))
            for p, _ in ss.solutions
        )
        assert d < 1e-6


def test_enclosed_cusps_open_trajectory_rules(cusps17):
    open_traj = JointTrajectory(
        rho1=17.0, waypoints=np.array([[19.0, 17.0], [20.0, 18.0]]), closed=False
    )
    with pytest.raises(ValueError):
        enclosed_cusps(open_traj, cusps17)


def test_trajectory_round_trip_dict():
    traj = JointTrajectory(
        rho1=17.0, waypoints=np.array([[19.0, 17.0], [25.0, 32.0], [14.0, 37.0]]), closed=True
    )
    again = JointTrajectory.from_dict(traj.to_dict())
    assert np.array_equal(traj.waypoints, again.waypoints)
    assert again.closed and again.rho1 == 17.0


def test_reversed_preserves_start():
    traj = JointTrajectory(
        rho1=17.0, waypoints=np.array([[19.0, 17.0], [25.0, 32.0], [14.0, 37.0]]), closed=True
    )
    rev = traj.reversed()
    assert np.array_equal(rev.waypoints[0], traj.waypoints[0])
    assert np.allclose(rev.point_at(0.25), traj.point_at(0.75))
