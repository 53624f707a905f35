"""Project configuration for the CLI and the HTTP service."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .fixture import REFERENCE_RHO1, REFERENCE_WINDOW, canonical_geometry
from .geometry import Geometry

CACHE_ENV = "CUSP_ATLAS_CACHE"


@dataclass(frozen=True)
class ProjectConfig:
    geometry_path: str | None = None
    default_rho1: float = REFERENCE_RHO1
    window: tuple[tuple[float, float], tuple[float, float]] = REFERENCE_WINDOW
    mesh_grid_n: int = 128
    contour_grid_n: int = 512
    count_grid_n: int = 64
    output_dir: str = "out"
    cache_dir: str | None = None
    port: int = 8777
    host: str = "127.0.0.1"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry_path is not None and not Path(self.geometry_path).exists():
            raise FileNotFoundError(f"geometry file {self.geometry_path!r} not found")
        for name, value in self.tolerances.items():
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"tolerance {name!r} must be positive")
        if self.default_rho1 <= 0:
            raise ValueError("default_rho1 must be positive")
        if self.mesh_grid_n < 64 or self.contour_grid_n < 64 or self.count_grid_n < 32:
            raise ValueError("grid resolutions below the supported minimum")

    def geometry(self) -> Geometry:
        if self.geometry_path is None:
            return canonical_geometry()
        return Geometry.from_file(self.geometry_path)

    def resolved_cache_dir(self) -> Path:
        env = os.environ.get(CACHE_ENV)
        if self.cache_dir is not None:
            return Path(self.cache_dir)
        if env:
            return Path(env)
        return Path(self.output_dir) / ".cache"

    @classmethod
    def from_file(cls, path: str | Path) -> "ProjectConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        window = data.get("window")
        if window is not None:
            data["window"] = ((window[0][0], window[0][1]), (window[1][0], window[1][1]))
        return cls(**data)
