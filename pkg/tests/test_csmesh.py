"""Configuration-space mesh: vertices, sheets, boundaries, layers, export."""

import json
import math

import numpy as np
import pytest

from cusp_atlas.csmesh import (
    SHEET_JUMP,
    build_cs,
    export_mesh,
    extract_layers,
    mesh_from_json,
)
from cusp_atlas.dk import solve_dk
from cusp_atlas.geometry import Aspect, JointVector, Pose, ang_dist, constraint_residual


def _nearest_node(mesh, rho2, rho3):
    r2ax, r3ax = mesh.grid_axes
    return int(np.argmin(np.abs(r2ax - rho2))), int(np.argmin(np.abs(r3ax - rho3)))


def test_reference_node_carries_three_vertices_per_aspect(geom, meshes17):
    m1, m2 = meshes17
    for m in (m1, m2):
        i, j = _nearest_node(m, 19.0, 17.0)
        assert len(m.node_vertices[i][j]) == 3


def test_unreachable_nodes_empty(geom):
    m1, m2 = build_cs(geom, 17.0, ((51.0, 60.0), (51.0, 60.0)), grid_n=64)
    assert len(m1.vertices) == 0 and len(m2.vertices) == 0
    assert export_mesh(m1, "json")  # empty mesh still serializes
    assert len(m1.faces) == 0


def test_vertices_satisfy_constraints_and_aspect(geom, meshes17):
    rng = np.random.default_rng(12)
    for m in meshes17:
        n_grid_verts = sum(
            len(m.node_vertices[i][j])
            for i in range(m.grid_n)
            for j in range(m.grid_n)
        )
        idx = rng.choice(n_grid_verts, size=200, replace=False)
        for k in idx:
            r2, r3, th, al, s = m.vertices[k]
            q = JointVector(m.rho1, r2, r3)
            res = np.abs(constraint_residual(geom, Pose(m.rho1, th, al), q)).max()
            assert res < 1e-9
            sign = geom.sigma * s
            if m.aspect == Aspect.ASPECT_1:
                assert sign > 0
            else:
                assert sign < 0


def test_boundary_vertices_near_zero_s(geom, meshes17):
    for m in meshes17:
        for pl in m.boundary_polylines:
            for v in pl:
                assert abs(m.vertices[v, 4]) / geom.scale < 1e-3


def test_faces_respect_sheet_jump_and_aspect(geom, meshes17):
    for m in meshes17:
        v = m.vertices
        for a, b, c in m.faces[:: max(1, len(m.faces) // 500)]:
            for x, y in ((a, b), (b, c), (a, c)):
                assert ang_dist(v[x, 2], v[y, 2]) <= SHEET_JUMP
                assert geom.sigma * v[x, 4] * (geom.sigma * v[y, 4]) > 0


def test_projection_completeness(geom, meshes17):
    """Mesh vertices at a node biject with the DK solutions of that aspect."""
    rng = np.random.default_rng(5)
    m1, m2 = meshes17
    r2ax, r3ax = m1.grid_axes
    for _ in range(60):
        i = int(rng.integers(0, m1.grid_n))
        j = int(rng.integers(0, m1.grid_n))
        ss = solve_dk(geom, JointVector(17.0, r2ax[i], r3ax[j]))
        for m in (m1, m2):
            want = [p for p, a in ss.solutions if a == m.aspect]
            got = [m.vertices[k, 2] for k in m.node_vertices[i][j]]
            assert len(want) == len(got)
            for p in want:
                assert min((ang_dist(p.theta1, t) for t in got), default=9) < 1e-9


def test_boundary_on_joint_slice_curve(geom, meshes17, joint_curves17):
    grid_step = (meshes17[0].window[0][1] - meshes17[0].window[0][0]) / (
        meshes17[0].grid_n - 1
    )
    allv = np.vstack([pl.vertices for pl in joint_curves17.polylines])
    for m in meshes17:
        for pl in m.boundary_polylines[:6]:
            for v in pl[:: max(1, len(pl) // 20)]:
                p = m.vertices[v, :2]
                d = np.min(np.linalg.norm(allv - p, axis=1))
                assert d < 2.0 * grid_step


def test_layers_in_central_region(geom, meshes17):
    for m in meshes17:
        i, j = _nearest_node(m, 19.0, 17.0)
        ids = m.node_vertices[i][j]
        labels = sorted(int(m.layer_id[v]) for v in ids)
        assert labels == [1, 2, 3]
        # ascending theta1 matches ascending label
        order = sorted(ids, key=lambda v: m.vertices[v, 2])
        assert [int(m.layer_id[v]) for v in order] == [1, 2, 3]


def test_layers_undefined_outside_three_sheet_region(geom, meshes17):
    m = meshes17[0]
    found = False
    for i in range(0, m.grid_n, 7):
        for j in range(0, m.grid_n, 7):
            ids = m.node_vertices[i][j]
            if len(ids) == 1:
                assert int(m.layer_id[ids[0]]) == 0
                found = True
    assert found


def test_no_direct_rank_one_to_three_faces(geom, meshes17):
    # ranks shift by at most one across composition changes (a sheet
    # appearing or vanishing below); a direct 1-3 face away from the theta1
    # wrap seam would mean sheets were stitched across a fold
    for m in meshes17:
        lid = m.layer_id
        v = m.vertices
        for a, b, c in m.faces:
            labs = {int(lid[a]), int(lid[b]), int(lid[c])}
            if {1, 3} <= labs:
                near_seam = any(
                    abs(abs(v[x, 2]) - math.pi) < SHEET_JUMP for x in (a, b, c)
                )
                assert near_seam


def test_mesh_graph_connects_layers(geom, meshes17):
    """Aspect sheets form one connected surface: layers 1 and 2 are linked."""
    m = meshes17[0]
    adj: dict[int, set[int]] = {}
    for a, b, c in m.faces:
        for u, v in ((a, b), (b, c), (a, c)):
            adj.setdefault(int(u), set()).add(int(v))
            adj.setdefault(int(v), set()).add(int(u))
    seeds = [v for v in range(len(m.vertices)) if m.layer_id[v] == 1]
    target = {v for v in range(len(m.vertices)) if m.layer_id[v] == 2}
    seen = set(seeds[:1])
    stack = list(seen)
    reached = False
    while stack and not reached:
        v = stack.pop()
        for u in adj.get(v, ()):
            if u not in seen:
                seen.add(u)
                stack.append(u)
                if u in target:
                    reached = True
                    break
    assert reached


def test_json_round_trip(geom, meshes17):
    m = meshes17[0]
    data = export_mesh(m, "json")
    m2 = mesh_from_json(data)
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.faces, m2.faces)
    assert np.array_equal(m.layer_id, m2.layer_id)
    assert len(m.boundary_polylines) == len(m2.boundary_polylines)
    assert m.node_vertices == m2.node_vertices
    # second export is byte-identical
    assert export_mesh(m2, "json") == data


def test_obj_vertex_count(geom, meshes17):
    m = meshes17[0]
    obj = export_mesh(m, "obj").decode()
    nv = sum(1 for line in obj.splitlines() if line.startswith("v "))
    assert nv == len(m.vertices)


def test_degenerate_coordinate_never_fires_for_canonical(geom, meshes17):
    # building the session meshes is itself the check: DEGENERATE_COORDINATE
    # would have raised during the 128x128 scan
    assert len(meshes17[0].vertices) > 0
