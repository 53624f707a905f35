"""Singularity and configuration-space toolkit for planar 3-RPR manipulators."""

from .atlas import (
    JointSliceCurve,
    Polyline,
    WorkspaceContour,
    aspect_component_count,
    joint_slice_curves,
    solution_count_map,
    workspace_singular_contour,
)
from .csmesh import CsMesh, build_cs, export_mesh, extract_layers, mesh_from_json
from .cusps import CuspPoint, coalescing_solutions, cusps_in_region, find_cusps
from .dk import (
    CharPoly,
    SolutionSet,
    build_charpoly,
    solutions_in_aspect,
    solve_dk,
)
from .errors import (
    CorrectorDivergedError,
    CuspAtlasError,
    DegenerateCoordinateError,
    DegenerateLegError,
    EliminationSingularError,
    NearDiscriminantWarning,
    NoPathError,
    OnBoundaryError,
    StartInconsistentError,
    ValidationFailedError,
)
from .geometry import (
    Aspect,
    Geometry,
    JacobianPair,
    JointVector,
    Pose,
    aspect_of,
    constraint_residual,
    inverse_kinematics,
    jacobian_pair,
    leg_lines,
    singularity_value,
    twist_from_joint_rates,
)
from .motion import (
    JointTrajectory,
    LoopClassification,
    Outcome,
    TraceResult,
    classify_loop,
    enclosed_cusps,
    singular_crossings,
    trace,
)
from .planner import (
    MeshGraph,
    PlanRequest,
    PlannedPath,
    min_singularity_margin,
    mode_index_by_layer,
    plan,
)
from .winding import winding_number

__version__ = "0.1.0"

__all__ = [
    "Aspect",
    "CharPoly",
    "CorrectorDivergedError",
    "CsMesh",
    "CuspAtlasError",
    "CuspPoint",
    "DegenerateCoordinateError",
    "DegenerateLegError",
    "EliminationSingularError",
    "Geometry",
    "JacobianPair",
    "JointSliceCurve",
    "JointTrajectory",
    "JointVector",
    "LoopClassification",
    "MeshGraph",
    "NearDiscriminantWarning",
    "NoPathError",
    "OnBoundaryError",
    "Outcome",
    "PlanRequest",
    "PlannedPath",
    "Polyline",
    "Pose",
    "SolutionSet",
    "StartInconsistentError",
    "TraceResult",
    "ValidationFailedError",
    "WorkspaceContour",
    "aspect_component_count",
    "aspect_of",
    "build_charpoly",
    "build_cs",
    "classify_loop",
    "coalescing_solutions",
    "constraint_residual",
    "cusps_in_region",
    "enclosed_cusps",
    "export_mesh",
    "extract_layers",
    "find_cusps",
    "inverse_kinematics",
    "jacobian_pair",
    "joint_slice_curves",
    "leg_lines",
    "mesh_from_json",
    "min_singularity_margin",
    "mode_index_by_layer",
    "plan",
    "singular_crossings",
    "singularity_value",
    "solution_count_map",
    "solutions_in_aspect",
    "solve_dk",
    "trace",
    "twist_from_joint_rates",
    "winding_number",
    "workspace_singular_contour",
]
