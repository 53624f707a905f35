/**
 * Typed client for the cusp-atlas HTTP service.
 *
 * Every number shown in the UI comes through this client: the frontend does
 * no kinematics of its own.  Mesh requests poll through the service's 503
 * build-progress responses.
 */

export interface PoseDoc {
  rho1: number;
  theta1: number;
  alpha: number;
}

export interface SolutionDoc {
  pose: PoseDoc;
  aspect: number; // 1 | 2 | 0
}

export interface DkDoc {
  schema: string;
  joint: [number, number, number];
  count: number;
  residual: number;
  near_discriminant: boolean;
  solutions: SolutionDoc[];
}

export interface CuspDoc {
  rho1: number;
  rho2: number;
  rho3: number;
  theta1: number;
  t: number;
  residuals: number[];
  third_derivative: number;
  degenerate: boolean;
}

export interface CuspsDoc {
  schema: string;
  rho1: number;
  count: number;
  cusps: CuspDoc[];
}

/** Vertex layout: rho2, rho3, theta1, alpha, S, layer. */
export type MeshVertex = [number, number, number, number, number, number];

export interface MeshDoc {
  schema: string;
  rho1: number;
  aspect: number;
  grid: { window: [[number, number], [number, number]]; n: number };
  vertices: MeshVertex[];
  faces: [number, number, number][];
  boundary: number[][];
}

export interface TrajectoryDoc {
  rho1: number;
  closed: boolean;
  waypoints: [number, number][];
}

export interface TraceDoc {
  schema: string;
  trajectory: TrajectoryDoc;
  start_mode: number;
  outcome: "SINGULAR_STOP" | "LOOP_SAME_MODE" | "MODE_CHANGE" | "OPEN_END";
  end_mode: number | null;
  stop_pose: PoseDoc | null;
  samples: [number, number, number, number, number, number][];
}

export interface PlanResultDoc {
  schema: string;
  request: {
    joint: [number, number, number];
    from_mode: number;
    to_mode: number;
    margin: number;
    weights: [number, number, number];
  };
  validated: boolean;
  min_margin: number;
  cs_polyline: [number, number, number][];
  joint_projection: TrajectoryDoc | null;
  enclosed_cusps: { cusp: CuspDoc; winding: number }[];
}

export interface ServiceError {
  error: string;
  detail: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export interface BuildProgress {
  status: "building";
  progress: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class AtlasClient {
  constructor(
    public baseUrl: string = "http://127.0.0.1:8777",
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      const err = body as ServiceError;
      throw new ApiError(resp.status, err.error ?? "HTTP_ERROR", err.detail ?? "");
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health");
  }

  geometry(): Promise<Record<string, unknown>> {
    return this.request("/api/geometry");
  }

  dk(q: [number, number, number]): Promise<DkDoc> {
    return this.post("/api/dk", { q });
  }

  cusps(rho1: number): Promise<CuspsDoc> {
    return this.request(`/api/cusps?rho1=${rho1}`);
  }

  /**
   * Fetch one aspect surface, waiting through 503 build-progress responses.
   * onProgress receives the build fraction while the service computes.
   */
  async csMesh(
    rho1: number,
    aspect: 1 | 2,
    n?: number,
    onProgress?: (fraction: number) => void,
    pollMs = 700,
    deadlineMs = 300_000,
  ): Promise<MeshDoc> {
    const nArg = n !== undefined ? `&n=${n}` : "";
    const path = `/api/cs-mesh?rho1=${rho1}&aspect=${aspect}${nArg}`;
    const start = Date.now();
    for (;;) {
      const resp = await this.fetchFn(this.baseUrl + path);
      const body = await resp.json();
      if (resp.status === 200) {
        return body as MeshDoc;
      }
      if (resp.status === 503) {
        onProgress?.((body as BuildProgress).progress ?? 0);
        if (Date.now() - start > deadlineMs) {
          throw new ApiError(503, "BUILD_TIMEOUT", "mesh build did not finish");
        }
        await new Promise((r) => setTimeout(r, pollMs));
        continue;
      }
      const err = body as ServiceError;
      throw new ApiError(resp.status, err.error ?? "HTTP_ERROR", err.detail ?? "");
    }
  }

  trace(trajectory: TrajectoryDoc, startMode: number, cadence = 1): Promise<TraceDoc> {
    return this.post("/api/trace", {
      trajectory,
      start_mode: startMode,
      cadence,
    });
  }

  /** Request a plan, waiting out 503 responses while its mesh builds. */
  async plan(
    q: [number, number, number],
    fromMode: number,
    toMode: number,
    opts: { margin?: number; weights?: [number, number, number]; gridN?: number } = {},
    onProgress?: (fraction: number) => void,
    pollMs = 700,
    deadlineMs = 300_000,
  ): Promise<PlanResultDoc> {
    const payload: Record<string, unknown> = {
      q,
      from_mode: fromMode,
      to_mode: toMode,
    };
    if (opts.margin !== undefined) payload.margin = opts.margin;
    if (opts.weights !== undefined) payload.weights = opts.weights;
    if (opts.gridN !== undefined) payload.grid_n = opts.gridN;
    const start = Date.now();
    for (;;) {
      const resp = await this.fetchFn(this.baseUrl + "/api/plan", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
      const body = await resp.json();
      if (resp.status === 200) {
        return body as PlanResultDoc;
      }
      if (resp.status === 503) {
        onProgress?.((body as BuildProgress).progress ?? 0);
        if (Date.now() - start > deadlineMs) {
          throw new ApiError(503, "BUILD_TIMEOUT", "mesh build did not finish");
        }
        await new Promise((r) => setTimeout(r, pollMs));
        continue;
      }
      const err = body as ServiceError;
      throw new ApiError(resp.status, err.error ?? "HTTP_ERROR", err.detail ?? "");
    }
  }
}
