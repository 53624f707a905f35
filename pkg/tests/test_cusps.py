"""Cusp finding: counts, certificates, perturbation behavior, region queries."""

import math

import numpy as np
import pytest

from cusp_atlas.cusps import (
    coalescing_solutions,
    cusps_in_region,
    find_cusps,
)
from cusp_atlas.dk import solve_dk
from cusp_atlas.errors import OnBoundaryError
from cusp_atlas.geometry import Aspect, JointVector, ang_dist


def test_six_cusps_at_reference_slice(cusps17):
    assert len(cusps17) == 6


def test_cusp_certificates(cusps17):
    for c in cusps17:
        assert max(c.residuals) < 1e-8
        assert not c.degenerate
        assert c.third_derivative > 1e-6


def test_cusp_theta_consistent(cusps17):
    for c in cusps17:
        assert ang_dist(2.0 * math.atan(c.t_triple), c.theta1) < 1e-12


def test_cusps_lie_on_joint_curve(cusps17, joint_curves17):
    for c in cusps17:
        d = min(
            np.min(np.linalg.norm(pl.vertices - c.joint_point(), axis=1))
            for pl in joint_curves17.polylines
        )
        assert d < 0.05  # within curve sampling resolution


def test_coalescing_trio_collapses(geom, cusps17):
    """Perturbation oracle: three solutions merge as the wedge offset shrinks."""
    c = next(cc for cc in cusps17 if 10 < cc.rho2 < 35 and 10 < cc.rho3 < 35)
    spreads = []
    for eps in (1e-2, 1e-3, 1e-4):
        trio = coalescing_solutions(geom, c, eps=eps)
        assert trio is not None
        thetas = sorted(p.theta1 for p, _ in trio)
        spreads.append(thetas[-1] - thetas[0])
    assert spreads[0] > spreads[1] > spreads[2]
    # cube-root scaling: a decade in eps shrinks the spread by ~2.15
    assert spreads[2] < 0.25 * spreads[0]


def test_coalescing_trio_is_two_plus_one(geom, cusps17):
    # the middle sheet always belongs to the opposite aspect (fold structure)
    for c in cusps17:
        trio = coalescing_solutions(geom, c)
        if trio is None:
            continue
        ordered = sorted(trio, key=lambda pa: pa[0].theta1)
        labels = [a for _, a in ordered]
        assert labels[0] == labels[2] != labels[1]
        assert Aspect.SINGULAR not in labels


def test_cusp_counts_even_across_slices(geom):
    for rho1 in (12.0, 14.0, 20.0, 24.0):
        cusps = find_cusps(geom, rho1, grid_n=256)
        assert len(cusps) % 2 == 0


def test_cusps_in_region_square(cusps17):
    c = cusps17[0]
    square = np.array(
        [
            [c.rho2 - 0.5, c.rho3 - 0.5],
            [c.rho2 + 0.5, c.rho3 - 0.5],
            [c.rho2 + 0.5, c.rho3 + 0.5],
            [c.rho2 - 0.5, c.rho3 + 0.5],
        ]
    )
    got = cusps_in_region(cusps17, square)
    assert got == [c]


def test_cusps_in_region_far_polygon(cusps17):
    polygon = np.array([[100.0, 100.0], [101.0, 100.0], [101.0, 101.0]])
    assert cusps_in_region(cusps17, polygon) == []


def test_cusps_in_region_reference_loop(cusps17, ref_loop):
    got = cusps_in_region(cusps17, ref_loop.trajectory.waypoints)
    assert len(got) == 1
    assert got[0].rho2 == ref_loop.cusp.rho2


def test_on_boundary_reported(cusps17):
    c = cusps17[0]
    polygon = np.array(
        [
            [c.rho2 - 1.0, c.rho3],  # edge passes through the cusp
            [c.rho2 + 1.0, c.rho3],
            [c.rho2 + 1.0, c.rho3 + 1.0],
        ]
    )
    with pytest.raises(OnBoundaryError):
        cusps_in_region(cusps17, polygon)


def test_empty_slice_returns_empty():
    # a geometry/slice without singular curve has nothing to seed from;
    # fabricate it by shrinking rho1 far below the reachable band
    from cusp_atlas.fixture import canonical_geometry
    from cusp_atlas.atlas import workspace_singular_contour

    g = canonical_geometry()
    # rho1 tiny: contour may still exist; just exercise the API path with
    # whatever comes back and assert consistency
    cusps = find_cusps(g, 0.4, grid_n=128)
    assert isinstance(cusps, list)
    for c in cusps:
        assert max(c.residuals) < 1e-8
