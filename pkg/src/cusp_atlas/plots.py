"""SVG figure emission (presentation only; excluded from byte determinism)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .atlas import JointSliceCurve, WorkspaceContour  # noqa: E402
from .csmesh import CsMesh  # noqa: E402
from .cusps import CuspPoint  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def workspace_contour_svg(wc: WorkspaceContour, path, traces=None) -> Path:
    fig, ax = plt.subplots(figsize=(6, 6))
    for pl in wc.polylines:
        ax.plot(pl.vertices[:, 0], pl.vertices[:, 1], "k-", lw=1)
    if traces:
        for label, arr in traces:
            ax.plot(arr[:, 4], arr[:, 3], lw=1.5, label=label)
        ax.legend(fontsize=7)
    ax.set_xlabel("alpha")
    ax.set_ylabel("theta1")
    ax.set_title(f"Singular curves, rho1 = {wc.rho1:g}")
    ax.set_xlim(-3.3, 3.3)
    ax.set_ylim(-3.3, 3.3)
    return _save(fig, path)


def joint_slice_svg(
    jc: JointSliceCurve,
    path,
    cusps: list[CuspPoint] | None = None,
    loops=None,
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 6))
    for pl in jc.polylines:
        ax.plot(pl.vertices[:, 0], pl.vertices[:, 1], "k-", lw=1)
    if cusps:
        ax.plot(
            [c.rho2 for c in cusps],
            [c.rho3 for c in cusps],
            "o",
            mfc="none",
            mec="red",
            ms=10,
        )
    if loops:
        for label, verts in loops:
            closed = list(verts) + [verts[0]]
            xs = [p[0] for p in closed]
            ys = [p[1] for p in closed]
            ax.plot(xs, ys, lw=1.5, label=label)
        ax.legend(fontsize=7)
    ax.set_xlabel("rho2")
    ax.set_ylabel("rho3")
    ax.set_title(f"Joint-space singular curves, rho1 = {jc.rho1:g}")
    ax.set_aspect("equal")
    return _save(fig, path)


def cs_mesh_svg(mesh: CsMesh, path, polyline=None, modes=None) -> Path:
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    v = mesh.vertices
    if len(mesh.faces):
        ax.plot_trisurf(
            v[:, 0],
            v[:, 1],
            v[:, 2],
            triangles=mesh.faces,
            cmap="viridis",
            alpha=0.6,
            linewidth=0.05,
            edgecolor="gray",
        )
    for pl in mesh.boundary_polylines:
        b = v[pl]
        ax.plot(b[:, 0], b[:, 1], b[:, 2], "k-", lw=2)
    if polyline is not None:
        ax.plot(polyline[:, 0], polyline[:, 1], polyline[:, 2], "r-", lw=2.5)
    if modes:
        for label, (x, y, z) in modes:
            ax.scatter([x], [y], [z], color="red", s=30)
            ax.text(x, y, z, label, fontsize=8)
    ax.set_xlabel("rho2")
    ax.set_ylabel("rho3")
    ax.set_zlabel("theta1")
    ax.set_title(f"CS aspect {int(mesh.aspect)}, rho1 = {mesh.rho1:g}")
    return _save(fig, path)


def plan_svg(mesh: CsMesh, planned, jc: JointSliceCurve, cusps, path) -> Path:
    fig = plt.figure(figsize=(12, 6))
    ax3 = fig.add_subplot(1, 2, 1, projection="3d")
    v = mesh.vertices
    if len(mesh.faces):
        ax3.plot_trisurf(
            v[:, 0],
            v[:, 1],
            v[:, 2],
            triangles=mesh.faces,
            cmap="viridis",
            alpha=0.4,
            linewidth=0,
        )
    pl = planned.cs_polyline
    ax3.plot(pl[:, 0], pl[:, 1], pl[:, 2], "r-", lw=2.5)
    ax3.set_xlabel("rho2")
    ax3.set_ylabel("rho3")
    ax3.set_zlabel("theta1")
    ax2 = fig.add_subplot(1, 2, 2)
    for c in jc.polylines:
        ax2.plot(c.vertices[:, 0], c.vertices[:, 1], "k-", lw=0.8)
    ax2.plot(pl[:, 0], pl[:, 1], "r-", lw=1.8)
    ax2.plot(
        [c.rho2 for c in cusps],
        [c.rho3 for c in cusps],
        "o",
        mfc="none",
        mec="red",
        ms=9,
    )
    for c, w in planned.enclosed:
        ax2.annotate(f"w={w}", (c.rho2, c.rho3), fontsize=8)
    ax2.set_aspect("equal")
    ax2.set_xlabel("rho2")
    ax2.set_ylabel("rho3")
    fig.suptitle(
        f"Mode {planned.request.from_mode} -> {planned.request.to_mode}, "
        f"margin {planned.request.margin:g}"
    )
    return _save(fig, path)
