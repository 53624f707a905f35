"""Mode planner: search, validation, cusp accounting, margins."""

import numpy as np
import pytest

from cusp_atlas.errors import NoPathError
from cusp_atlas.geometry import Aspect
from cusp_atlas.planner import (
    MeshGraph,
    PlanRequest,
    min_singularity_margin,
    mode_index_by_layer,
    plan,
)


@pytest.fixture(scope="module")
def graph1(meshes17):
    return MeshGraph(meshes17[0])


def test_mode_index_by_layer(geom, ref_solutions):
    idx = [
        mode_index_by_layer(geom, ref_solutions, Aspect.ASPECT_1, k) for k in (1, 2, 3)
    ]
    thetas = [ref_solutions.solutions[i][0].theta1 for i in idx]
    assert thetas == sorted(thetas)
    labels = {ref_solutions.solutions[i][1] for i in idx}
    assert labels == {Aspect.ASPECT_1}


def test_single_cusp_plans(geom, meshes17, graph1, cusps17, ref_joint, mode_chain):
    end1, middle, end2, links = mode_chain
    for pair in ((end1, middle), (middle, end2)):
        req = PlanRequest(joint=ref_joint, from_mode=pair[0], to_mode=pair[1])
        p = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)
        assert p.validated
        assert len(p.enclosed) == 1
        cusp, w = p.enclosed[0]
        assert w != 0
        assert (cusp.rho2, cusp.rho3) == (
            links[tuple(sorted(pair))].rho2,
            links[tuple(sorted(pair))].rho3,
        )


def test_two_cusp_plan(geom, meshes17, graph1, cusps17, ref_joint, mode_chain):
    end1, middle, end2, links = mode_chain
    req = PlanRequest(joint=ref_joint, from_mode=end1, to_mode=end2)
    p = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)
    assert p.validated
    assert len(p.enclosed) == 2
    enclosed_pts = {(c.rho2, c.rho3) for c, _ in p.enclosed}
    link_pts = {(c.rho2, c.rho3) for c in links.values()}
    assert enclosed_pts == link_pts


def test_zero_length_plan(geom, meshes17, graph1, ref_joint, cusps17, mode_chain):
    _, middle, _, _ = mode_chain
    req = PlanRequest(joint=ref_joint, from_mode=middle, to_mode=middle)
    p = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)
    assert p.validated
    assert len(p.cs_polyline) == 1
    assert p.enclosed == ()
    assert p.min_margin > 0


def test_min_margin_respects_request(geom, meshes17, graph1, cusps17, ref_joint, mode_chain):
    end1, middle, _, _ = mode_chain
    req = PlanRequest(joint=ref_joint, from_mode=end1, to_mode=middle, margin=0.05)
    p = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)
    # interpolation slack: vertices clear the margin, segments may dip a bit
    assert p.min_margin >= 0.05 - 0.02
    dense = min_singularity_margin(geom, p, samples_per_seg=6)
    assert dense >= 0.05 - 0.02
    assert dense <= p.min_margin + 1e-9


def test_margin_monotonicity_and_no_path(geom, meshes17, graph1, cusps17, ref_joint, mode_chain):
    end1, middle, _, _ = mode_chain

    def path_len(p):
        d = np.diff(p.cs_polyline[:, :2], axis=0)
        return float(np.sum(np.linalg.norm(d, axis=1)))

    lengths = []
    for margin in (0.01, 0.03, 0.06):
        req = PlanRequest(joint=ref_joint, from_mode=end1, to_mode=middle, margin=margin)
        lengths.append(path_len(plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)))
    assert lengths[0] <= lengths[1] + 1e-9 <= lengths[2] + 2e-9
    with pytest.raises(NoPathError):
        plan(
            geom,
            meshes17[0],
            PlanRequest(joint=ref_joint, from_mode=end1, to_mode=middle, margin=0.9),
            graph=graph1,
            cusps=cusps17,
        )


def test_every_plan_winds_at_least_one_cusp(geom, meshes17, graph1, cusps17, ref_joint, mode_chain):
    end1, middle, end2, _ = mode_chain
    rng = np.random.default_rng(31)
    pairs = [(end1, middle), (middle, end2), (end1, end2), (middle, end1)]
    for k in range(10):
        a, b = pairs[k % len(pairs)]
        w = tuple(rng.uniform(0.5, 3.0, size=3))
        margin = float(rng.uniform(0.01, 0.04))
        req = PlanRequest(joint=ref_joint, from_mode=a, to_mode=b, margin=margin, weights=w)
        p = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)
        assert p.validated
        assert len(p.enclosed) >= 1


def test_plan_rejects_cross_aspect(geom, meshes17, ref_joint, ref_solutions):
    a1 = next(k for k, (_, a) in enumerate(ref_solutions.solutions) if a == Aspect.ASPECT_1)
    a2 = next(k for k, (_, a) in enumerate(ref_solutions.solutions) if a == Aspect.ASPECT_2)
    with pytest.raises(ValueError):
        plan(geom, meshes17[0], PlanRequest(joint=ref_joint, from_mode=a1, to_mode=a2))


def test_shortcut_pass_keeps_validity(geom, meshes17, graph1, cusps17, ref_joint, mode_chain):
    end1, middle, _, _ = mode_chain
    req = PlanRequest(joint=ref_joint, from_mode=end1, to_mode=middle)
    base = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17)
    cut = plan(geom, meshes17[0], req, graph=graph1, cusps=cusps17, shortcut=True)
    assert cut.validated
    assert len(cut.cs_polyline) <= len(base.cs_polyline)
    assert {(c.rho2, c.rho3) for c, _ in cut.enclosed} == {
        (c.rho2, c.rho3) for c, _ in base.enclosed
    }


def test_plan_aspect2_pair(geom, meshes17, cusps17, ref_joint, ref_solutions):
    # aspect-2 modes plan on the aspect-2 mesh with its own cusp structure
    idx = [k for k, (_, a) in enumerate(ref_solutions.solutions) if a == Aspect.ASPECT_2]
    req = PlanRequest(joint=ref_joint, from_mode=idx[0], to_mode=idx[1])
    p = plan(geom, meshes17[1], req, cusps=cusps17)
    assert p.validated
    assert len(p.enclosed) >= 1
