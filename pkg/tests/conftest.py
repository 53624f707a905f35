"""Shared fixtures: the heavy canonical-slice artifacts build once per session."""

from __future__ import annotations

import pytest

from cusp_atlas.atlas import joint_slice_curves, workspace_singular_contour
from cusp_atlas.csmesh import build_cs, extract_layers
from cusp_atlas.cusps import find_cusps
from cusp_atlas.dk import solve_dk
from cusp_atlas.fixture import (
    REFERENCE_WINDOW,
    aspect1_mode_chain,
    canonical_geometry,
    reference_joint,
    reference_triangle,
)


@pytest.fixture(scope="session")
def geom():
    return canonical_geometry()


@pytest.fixture(scope="session")
def ref_joint():
    return reference_joint()


@pytest.fixture(scope="session")
def ref_solutions(geom, ref_joint):
    return solve_dk(geom, ref_joint)


@pytest.fixture(scope="session")
def contour17(geom):
    return workspace_singular_contour(geom, 17.0, grid_n=512)


@pytest.fixture(scope="session")
def joint_curves17(geom, contour17):
    return joint_slice_curves(geom, contour17)


@pytest.fixture(scope="session")
def cusps17(geom, contour17):
    return find_cusps(geom, 17.0, contour=contour17)


@pytest.fixture(scope="session")
def meshes17(geom):
    m1, m2 = build_cs(geom, 17.0, REFERENCE_WINDOW, grid_n=128)
    return extract_layers(m1), extract_layers(m2)


@pytest.fixture(scope="session")
def ref_loop(geom, cusps17):
    return reference_triangle(geom, cusps17)


@pytest.fixture(scope="session")
def mode_chain(geom, cusps17):
    return aspect1_mode_chain(geom, cusps17)
