"""Local HTTP JSON service exposing every computation to the UI and scripts.

All bodies are produced by the same artifact builders as the CLI, rendered
through the canonical JSON writer, so responses for identical parameters are
byte-identical to the CLI's files.  Heavy meshes build once per cache key in
a background thread; requests arriving during a build get 503 plus the
current progress fraction.
"""

from __future__ import annotations

import json
from concurrent.futures import Future, ThreadPoolExecutor
from threading import Lock

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from . import artifacts
from .cache import ArtifactCache
from .config import ProjectConfig
from .csmesh import mesh_from_json
from .errors import CuspAtlasError
from .geometry import Aspect, JointVector, Pose
from .jsonio import dumps
from .motion import JointTrajectory
from .planner import DEFAULT_MARGIN, DEFAULT_WEIGHTS, PlanRequest, plan


def _json_response(doc: dict, status: int = 200) -> Response:
    return Response(
        content=dumps(doc) + "\n", status_code=status, media_type="application/json"
    )


def _bytes_response(data: bytes) -> Response:
    return Response(content=data, media_type="application/json")


def create_app(config: ProjectConfig | None = None) -> FastAPI:
    cfg = config or ProjectConfig()
    g = cfg.geometry()
    cache = ArtifactCache(cfg.resolved_cache_dir())
    executor = ThreadPoolExecutor(max_workers=2)
    builds: dict[str, Future] = {}
    builds_lock = Lock()

    app = FastAPI(title="cusp-atlas", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.config = cfg
    app.state.geometry = g
    app.state.cache = cache

    @app.exception_handler(CuspAtlasError)
    async def _domain_error(_req: Request, exc: CuspAtlasError):
        return _json_response({"error": exc.code, "detail": str(exc)}, status=422)

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return _json_response({"error": "BAD_REQUEST", "detail": str(exc)}, status=400)

    def mesh_key_params(rho1: float, aspect: int, n: int, fmt: str) -> dict:
        return {
            "rho1": rho1,
            "aspect": aspect,
            "window": [list(cfg.window[0]), list(cfg.window[1])],
            "grid_n": n,
            "format": fmt,
        }

    def mesh_bytes_or_progress(rho1: float, aspect: int, n: int, fmt: str):
        """Cached bytes, or (key, progress) when the build is still running."""
        key = cache.key(g, "cs-mesh", mesh_key_params(rho1, aspect, n, fmt))
        cached = cache.get(key, fmt)
        if cached is not None:
            return cached
        with builds_lock:
            fut = builds.get(key)
            if fut is None:

                def build() -> bytes:
                    return cache.get_or_build(
                        key,
                        fmt,
                        lambda: artifacts.mesh_artifact_bytes(
                            g,
                            rho1,
                            Aspect(aspect),
                            cfg.window,
                            n,
                            fmt,
                            progress=lambda f: cache.set_progress(key, f),
                        ),
                    )

                fut = executor.submit(build)
                builds[key] = fut
        if fut.done():
            with builds_lock:
                builds.pop(key, None)
            return fut.result()  # raises build errors to the handler
        return key, cache.progress(key) or 0.0

    @app.get("/api/health")
    def health():
        return _json_response({"status": "ok"})

    @app.get("/api/geometry")
    def geometry():
        return _json_response(artifacts.geometry_artifact(g))

    @app.post("/api/dk")
    async def dk(request: Request):
        body = await _body(request)
        q = _joint_from(body)
        return _json_response(artifacts.dk_artifact(g, q))

    @app.post("/api/ik")
    async def ik(request: Request):
        body = await _body(request)
        pose = body.get("pose")
        if not isinstance(pose, list) or len(pose) != 3:
            raise ValueError("body must carry pose: [rho1, theta1, alpha]")
        return _json_response(artifacts.ik_artifact(g, Pose(*map(float, pose))))

    @app.get("/api/singular-curves")
    def singular_curves(rho1: float, n: int | None = None):
        grid_n = n or cfg.contour_grid_n
        key = cache.key(g, "singular-curves", {"rho1": rho1, "grid_n": grid_n})

        def build() -> bytes:
            return artifacts.to_bytes(
                artifacts.singular_curves_artifact(g, rho1, grid_n)
            )

        return _bytes_response(cache.get_or_build(key, "json", build))

    @app.get("/api/cusps")
    def cusps(rho1: float):
        key = cache.key(g, "cusps", {"rho1": rho1})

        def build() -> bytes:
            return artifacts.to_bytes(artifacts.cusps_artifact(g, rho1))

        return _bytes_response(cache.get_or_build(key, "json", build))

    @app.get("/api/cs-mesh")
    def cs_mesh(rho1: float, aspect: int, n: int | None = None, fmt: str = "json"):
        if aspect not in (1, 2):
            raise ValueError("aspect must be 1 or 2")
        if fmt not in ("json", "obj"):
            raise ValueError("fmt must be json or obj")
        got = mesh_bytes_or_progress(rho1, aspect, n or cfg.mesh_grid_n, fmt)
        if isinstance(got, bytes):
            return _bytes_response(got)
        _key, progress = got
        return _json_response(
            {"status": "building", "progress": progress}, status=503
        )

    @app.post("/api/trace")
    async def trace_endpoint(request: Request):
        body = await _body(request)
        traj = _trajectory_from(body)
        start_mode = body.get("start_mode")
        start_pose = body.get("start_pose")
        if start_pose is not None:
            if not isinstance(start_pose, list) or len(start_pose) != 3:
                raise ValueError("start_pose must be [rho1, theta1, alpha]")
            pose = Pose(*map(float, start_pose))
            return _json_response(
                artifacts.trace_artifact(
                    g, traj, cadence=int(body.get("cadence", 1)), start_pose=pose
                )
            )
        if not isinstance(start_mode, int):
            raise ValueError("body must carry integer start_mode or a start_pose")
        cadence = int(body.get("cadence", 1))
        return _json_response(
            artifacts.trace_artifact(g, traj, start_mode, cadence=cadence)
        )

    @app.post("/api/classify-loop")
    async def classify_endpoint(request: Request):
        body = await _body(request)
        traj = _trajectory_from(body)
        return _json_response(artifacts.classify_artifact(g, traj))

    @app.post("/api/plan")
    async def plan_endpoint(request: Request):
        body = await _body(request)
        q = _joint_from(body)
        from_mode = body.get("from_mode")
        to_mode = body.get("to_mode")
        if not isinstance(from_mode, int) or not isinstance(to_mode, int):
            raise ValueError("body must carry integer from_mode and to_mode")
        margin = float(body.get("margin", DEFAULT_MARGIN))
        weights = tuple(float(x) for x in body.get("weights", DEFAULT_WEIGHTS))
        if len(weights) != 3:
            raise ValueError("weights must have three components")
        grid_n = int(body.get("grid_n", cfg.mesh_grid_n))

        from .dk import solve_dk

        solset = solve_dk(g, q)
        if not (0 <= from_mode < len(solset)):
            raise ValueError(f"from_mode out of range (0..{len(solset) - 1})")
        aspect = int(solset.solutions[from_mode][1])
        got = mesh_bytes_or_progress(q.rho1, aspect, grid_n, "json")
        if not isinstance(got, bytes):
            return _json_response(
                {"status": "building", "progress": got[1]}, status=503
            )
        mesh = mesh_from_json(got)
        req = PlanRequest(
            joint=q, from_mode=from_mode, to_mode=to_mode, margin=margin, weights=weights
        )
        return _json_response(artifacts.plan_artifact(g, mesh, req))

    return app


async def _body(request: Request) -> dict:
    try:
        data = await request.json()
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON body: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("body must be a JSON object")
    return data


def _joint_from(body: dict) -> JointVector:
    q = body.get("q")
    if not isinstance(q, list) or len(q) != 3:
        raise ValueError("body must carry q: [rho1, rho2, rho3]")
    return JointVector(*map(float, q))


def _trajectory_from(body: dict) -> JointTrajectory:
    traj = body.get("trajectory")
    if not isinstance(traj, dict):
        raise ValueError("body must carry a trajectory object")
    return JointTrajectory.from_dict(traj)
