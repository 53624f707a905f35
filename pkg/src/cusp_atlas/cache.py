"""Content-addressed artifact cache with single-flight builds.

Keys are hashes of the canonical JSON of (geometry, operation, parameters),
so a key collision implies a byte-identical artifact.  Lookups never change
numerical results: the cache stores exactly the bytes the builder produced.
"""

from __future__ import annotations

import hashlib
import threading
from pathlib import Path
from typing import Callable

from .geometry import Geometry
from .jsonio import dumps


class ArtifactCache:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._progress: dict[str, float] = {}

    def key(self, g: Geometry, operation: str, params: dict) -> str:
        doc = {"geometry": g.to_dict(), "operation": operation, "params": params}
        return hashlib.sha256(dumps(doc).encode("utf-8")).hexdigest()

    def path(self, key: str, suffix: str) -> Path:
        return self.directory / f"{key}.{suffix}"

    def get(self, key: str, suffix: str) -> bytes | None:
        p = self.path(key, suffix)
        return p.read_bytes() if p.exists() else None

    def put(self, key: str, suffix: str, data: bytes) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.path(key, suffix)
        tmp = p.with_suffix(p.suffix + ".tmp")
        tmp.write_bytes(data)
        tmp.replace(p)
        return p

    def progress(self, key: str) -> float | None:
        return self._progress.get(key)

    def set_progress(self, key: str, fraction: float) -> None:
        self._progress[key] = max(0.0, min(1.0, fraction))

    def get_or_build(
        self, key: str, suffix: str, builder: Callable[[], bytes]
    ) -> bytes:
        """Fetch the artifact, building it at most once across threads."""
        cached = self.get(key, suffix)
        if cached is not None:
            return cached
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            cached = self.get(key, suffix)
            if cached is not None:
                return cached
            data = builder()
            self.put(key, suffix, data)
            self._progress.pop(key, None)
            return data
