"""Typed errors and warnings shared across the toolkit."""


class CuspAtlasError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "ERROR"


class DegenerateLegError(CuspAtlasError):
    """A leg has zero length, so its axis direction is undefined."""

    code = "DEGENERATE_LEG"

    def __init__(self, leg: int, message: str | None = None):
        self.leg = leg
        super().__init__(message or f"leg {leg} has zero length; leg angle undefined")


class EliminationSingularError(CuspAtlasError):
    """The linear solve used to eliminate the platform angle is identically singular."""

    code = "ELIMINATION_SINGULAR"


class StartInconsistentError(CuspAtlasError):
    """A trace was started from a pose that does not satisfy the constraints."""

    code = "START_INCONSISTENT"


class CorrectorDivergedError(CuspAtlasError):
    """Continuation step floor reached without a certified fold."""

    code = "CORRECTOR_DIVERGED"


class OnBoundaryError(CuspAtlasError):
    """Winding number query for a point lying on the polygon itself."""

    code = "ON_BOUNDARY"


class NoPathError(CuspAtlasError):
    """The planner found no path between the requested modes at this margin."""

    code = "NO_PATH"


class ValidationFailedError(CuspAtlasError):
    """A graph path was found but re-tracing it did not reach the requested mode."""

    code = "VALIDATION_FAILED"


class DegenerateCoordinateError(CuspAtlasError):
    """Two same-aspect solutions share a leg-1 angle; the surface coordinate is invalid."""

    code = "DEGENERATE_COORDINATE"


class NearDiscriminantWarning(UserWarning):
    """Two characteristic-polynomial roots nearly coincide; the solution count is unreliable."""
