"""Direct-kinematics solver: characteristic polynomial, roots, solution sets."""

import math

import numpy as np
import pytest

from cusp_atlas.dk import (
    _alpha_slice_basis,
    build_charpoly,
    newton_polish,
    slice_basis,
    solutions_in_aspect,
    solve_dk,
)
from cusp_atlas.errors import DegenerateLegError
from cusp_atlas.geometry import (
    Aspect,
    Geometry,
    JointVector,
    Pose,
    ang_dist,
    inverse_kinematics,
)

from oracles import dk_brute


def test_reference_joint_has_six_real_roots(geom, ref_joint):
    cp = build_charpoly(geom, ref_joint)
    assert cp.variable == "theta1"
    assert not cp.degree_drop
    roots = np.roots((cp.coeffs / np.abs(cp.coeffs).max())[::-1])
    real = [r for r in roots if abs(r.imag) < 1e-8 * (1 + abs(r.real))]
    assert len(real) == 6


def test_unreachable_joint_no_real_roots(geom):
    # max |B2 - A2| = rho1 + d1 + a2x ~ 49.95 < 100
    cp = build_charpoly(geom, JointVector(17.0, 100.0, 17.0))
    roots = np.roots((cp.coeffs / np.abs(cp.coeffs).max())[::-1])
    assert all(abs(r.imag) > 1e-8 * (1 + abs(r.real)) for r in roots)
    assert len(solve_dk(geom, JointVector(17.0, 100.0, 17.0))) == 0


def test_random_joint_counts_even_and_bounded(geom):
    rng = np.random.default_rng(100)
    for _ in range(500):
        q = JointVector(17.0, rng.uniform(10, 30), rng.uniform(10, 30))
        ss = solve_dk(geom, q)
        assert len(ss) <= 6
        labels = [label for _, label in ss.solutions]
        if not ss.near_discriminant:
            assert len(ss) % 2 == 0
            if Aspect.SINGULAR not in labels:
                # aspect balance: counts split equally in every open region
                assert labels.count(Aspect.ASPECT_1) == labels.count(Aspect.ASPECT_2)


def test_pose_round_trip_appears_in_solutions(geom):
    rng = np.random.default_rng(21)
    found = 0
    while found < 40:
        p = Pose(17.0, rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi))
        try:
            q = inverse_kinematics(geom, p)
        except DegenerateLegError:
            continue
        ss = solve_dk(geom, q)
        dists = [
            math.hypot(ang_dist(p.theta1, s.theta1), ang_dist(p.alpha, s.alpha))
            for s, _ in ss.solutions
        ]
        assert dists and min(dists) < 1e-8
        found += 1


def test_solutions_residual_verified(geom, ref_solutions):
    assert ref_solutions.residual < 1e-9


def test_solutions_in_aspect_sorted_and_split(geom, ref_solutions):
    a1 = solutions_in_aspect(ref_solutions, Aspect.ASPECT_1)
    a2 = solutions_in_aspect(ref_solutions, Aspect.ASPECT_2)
    assert len(a1) == 3 and len(a2) == 3
    assert [p.theta1 for p in a1] == sorted(p.theta1 for p in a1)


def test_solutions_in_aspect_empty_set(geom):
    ss = solve_dk(geom, JointVector(17.0, 100.0, 17.0))
    assert solutions_in_aspect(ss, Aspect.ASPECT_1) == []


def test_brute_force_oracle_agreement_sample(geom):
    # the full 50x50 sweep is acceptance A5; spot-check a few joints here
    rng = np.random.default_rng(17)
    for _ in range(12):
        q = JointVector(17.0, rng.uniform(12, 28), rng.uniform(12, 28))
        ss = solve_dk(geom, q)
        if ss.near_discriminant:
            continue
        brute = dk_brute(geom, q)
        assert len(brute) == len(ss)
        for p, _ in ss.solutions:
            d = min(
                math.hypot(ang_dist(p.theta1, t), ang_dist(p.alpha, a))
                for t, a in brute
            )
            assert d < 1e-6


def test_alpha_route_basis_matches_theta_route(geom, ref_joint):
    """The fallback eliminant (alpha half-angle) finds the same assembly modes."""
    basis = _alpha_slice_basis(geom, ref_joint.rho1)
    c = basis.coeffs(ref_joint.rho2, ref_joint.rho3)
    roots = np.roots((c / np.abs(c).max())[::-1])
    alphas = [
        2.0 * math.atan(r.real)
        for r in roots
        if abs(r.imag) < 1e-8 * (1 + abs(r.real))
    ]
    ss = solve_dk(geom, ref_joint)
    expected = sorted(p.alpha for p, _ in ss.solutions)
    polished = []
    for al in alphas:
        for p, _ in ss.solutions:
            th, a2, res = newton_polish(geom, ref_joint, p.theta1, al)
            if res < 1e-9:
                polished.append(a2)
    assert len(alphas) == 6
    for e in expected:
        assert min(ang_dist(e, a) for a in alphas) < 1e-6


def test_charpoly_value_at_solutions_is_zero(geom, ref_joint, ref_solutions):
    cp = build_charpoly(geom, ref_joint)
    scale = np.abs(cp.coeffs).max()
    for pose, _ in ref_solutions.solutions:
        t = math.tan(pose.theta1 / 2.0)
        assert abs(cp(t)) / scale < 1e-10 * (1.0 + t * t) ** 3


def test_slice_basis_matches_direct_construction(geom):
    rng = np.random.default_rng(2)
    sb = slice_basis(geom, 17.0)
    for _ in range(5):
        r2, r3 = rng.uniform(10, 30, size=2)
        c = sb.coeffs(r2, r3)
        # derivative bases against finite differences
        h = 1e-6
        du_fd = (sb.coeffs(r2 + h, r3) - sb.coeffs(r2 - h, r3)) / (2 * h)
        dv_fd = (sb.coeffs(r2, r3 + h) - sb.coeffs(r2, r3 - h)) / (2 * h)
        assert np.abs(sb.coeffs_du(r2, r3) - du_fd).max() < 1e-4 * np.abs(c).max()
        assert np.abs(sb.coeffs_dv(r2, r3) - dv_fd).max() < 1e-4 * np.abs(c).max()


def test_near_discriminant_flag_on_fold(geom, contour17):
    # a machine-refined double-root point must be flagged: the count there is
    # genuinely unreliable (roots split as sqrt of the offset)
    from cusp_atlas.cusps import _gauss_newton_onto_locus, _LocusSystem

    sys = _LocusSystem(slice_basis(geom, 17.0))
    alpha, theta1 = contour17.polylines[0].vertices[40]
    q = inverse_kinematics(geom, Pose(17.0, theta1, alpha))
    x = _gauss_newton_onto_locus(
        sys, np.array([math.tan(theta1 / 2.0), q.rho2, q.rho3])
    )
    assert x is not None
    ss = solve_dk(geom, JointVector(17.0, float(x[1]), float(x[2])))
    assert ss.near_discriminant


def test_theta1_pi_solution_found():
    # symmetric geometry: platform stretched along -x reaches theta1 = pi
    g = Geometry(a2x=10.0, a3x=5.0, a3y=8.0, d1=4.0, d2=5.0, d3=4.0)
    p = Pose(6.0, math.pi, 0.5)
    q = inverse_kinematics(g, p)
    ss = solve_dk(g, q)
    dists = [
        math.hypot(ang_dist(p.theta1, s.theta1), ang_dist(p.alpha, s.alpha))
        for s, _ in ss.solutions
    ]
    assert dists and min(dists) < 1e-7
