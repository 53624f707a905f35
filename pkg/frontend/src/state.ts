/**
 * Scene state and interaction logic, framework-free.
 *
 * The store owns everything the renderer shows: loaded meshes, cusp
 * markers, the waypoint list, per-segment validation status, and the plan
 * overlay.  All numbers come from service responses; edits are debounced
 * and validated through /api/trace, and responses carry a sequence number
 * so a stale validation can never overwrite a newer one.
 */

import {
  ApiError,
  AtlasClient,
  CuspDoc,
  DkDoc,
  MeshDoc,
  PlanResultDoc,
  TraceDoc,
  TrajectoryDoc,
} from "./api.js";
import { angDist, windingNumber } from "./geometry.js";

export type SegmentStatus = "validated" | "crosses-boundary" | "pending";

export interface Waypoint {
  rho2: number;
  rho3: number;
  theta1: number;
}

export interface ValidationView {
  /** One status per polyline segment (start -> w0 -> ... -> wn -> start). */
  segments: SegmentStatus[];
  outcome: TraceDoc["outcome"] | null;
  arrivalMode: number | null;
  /** min |S|/scale along the trace; negative when the trace hit a fold. */
  margin: number | null;
  enclosedCount: number | null;
}

export interface PlanOverlay {
  polyline: [number, number, number][];
  enclosed: { cusp: CuspDoc; winding: number }[];
  minMargin: number;
  fromMode: number;
  toMode: number;
}

export interface SceneState {
  rho1: number | null;
  meshes: { 1: MeshDoc | null; 2: MeshDoc | null };
  meshVisible: { 1: boolean; 2: boolean };
  buildProgress: { 1: number | null; 2: number | null };
  cusps: CuspDoc[];
  joint: [number, number, number] | null;
  modes: DkDoc | null;
  startMode: number | null;
  waypoints: Waypoint[];
  snapToMesh: boolean;
  validation: ValidationView;
  planOverlay: PlanOverlay | null;
  notice: string | null;
  errorBanner: string | null;
}

const EMPTY_VALIDATION: ValidationView = {
  segments: [],
  outcome: null,
  arrivalMode: null,
  margin: null,
  enclosedCount: null,
};

export interface StoreOptions {
  debounceMs?: number;
  /** injectable scheduler for tests */
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
}

export class ExplorerStore {
  state: SceneState = {
    rho1: null,
    meshes: { 1: null, 2: null },
    meshVisible: { 1: true, 2: true },
    buildProgress: { 1: null, 2: null },
    cusps: [],
    joint: null,
    modes: null,
    startMode: null,
    waypoints: [],
    snapToMesh: true,
    validation: EMPTY_VALIDATION,
    planOverlay: null,
    notice: null,
    errorBanner: null,
  };

  private listeners: Array<(s: SceneState) => void> = [];
  private seq = 0; // last issued validation request id
  private applied = 0; // last applied response id
  private debounceHandle: unknown = null;
  private geometryScale: number | null = null;
  private readonly debounceMs: number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;
  private readonly clearTimeoutFn: (handle: unknown) => void;

  constructor(
    public client: AtlasClient,
    opts: StoreOptions = {},
  ) {
    this.debounceMs = opts.debounceMs ?? 150;
    this.setTimeoutFn = opts.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimeoutFn = opts.clearTimeoutFn ?? ((h) => clearTimeout(h as number));
  }

  subscribe(fn: (s: SceneState) => void): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private patch(partial: Partial<SceneState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  /** Fetch both aspect surfaces and the cusps of a slice. */
  async loadSlice(rho1: number, gridN?: number): Promise<void> {
    this.patch({
      rho1,
      meshes: { 1: null, 2: null },
      buildProgress: { 1: 0, 2: 0 },
      cusps: [],
      errorBanner: null,
    });
    try {
      const scale = await this.ensureScale();
      void scale;
      const [m1, m2, cusps] = await Promise.all([
        this.client.csMesh(rho1, 1, gridN, (f) =>
          this.patch({ buildProgress: { ...this.state.buildProgress, 1: f } }),
        ),
        this.client.csMesh(rho1, 2, gridN, (f) =>
          this.patch({ buildProgress: { ...this.state.buildProgress, 2: f } }),
        ),
        this.client.cusps(rho1),
      ]);
      this.patch({
        meshes: { 1: m1, 2: m2 },
        buildProgress: { 1: null, 2: null },
        cusps: cusps.cusps,
      });
    } catch (err) {
      this.patch({
        errorBanner: `service unreachable or failed: ${(err as Error).message}`,
        buildProgress: { 1: null, 2: null },
      });
    }
  }

  async ensureScale(): Promise<number> {
    if (this.geometryScale === null) {
      const g = (await this.client.geometry()) as {
        a2x: number;
        a3: [number, number];
      };
      this.geometryScale = g.a2x + Math.hypot(g.a3[0], g.a3[1]);
    }
    return this.geometryScale;
  }

  toggleAspect(aspect: 1 | 2): void {
    this.patch({
      meshVisible: {
        ...this.state.meshVisible,
        [aspect]: !this.state.meshVisible[aspect],
      },
    });
  }

  /** Solve and remember the modes at a joint vector; pick none yet. */
  async selectJoint(q: [number, number, number]): Promise<DkDoc> {
    const modes = await this.client.dk(q);
    this.patch({ joint: q, modes, startMode: null, waypoints: [], validation: EMPTY_VALIDATION });
    return modes;
  }

  selectStartMode(index: number): void {
    const modes = this.state.modes;
    if (!modes || index < 0 || index >= modes.solutions.length) {
      throw new Error(`mode index ${index} out of range`);
    }
    this.patch({ startMode: index, validation: EMPTY_VALIDATION, planOverlay: null });
  }

  setSnap(enabled: boolean): void {
    this.patch({ snapToMesh: enabled });
  }

  /** Snap a CS point to the nearest same-sheet mesh vertex (display aid). */
  snapPoint(p: Waypoint): Waypoint {
    const aspect = this.startAspect();
    const mesh = aspect ? this.state.meshes[aspect] : null;
    if (!this.state.snapToMesh || !mesh) return p;
    let best: Waypoint = p;
    let bestD = Infinity;
    for (const v of mesh.vertices) {
      const dTheta = angDist(v[2], p.theta1);
      if (dTheta > 0.3) continue; // different sheet
      const d = Math.hypot(v[0] - p.rho2, v[1] - p.rho3) + dTheta;
      if (d < bestD) {
        bestD = d;
        best = { rho2: v[0], rho3: v[1], theta1: v[2] };
      }
    }
    return best;
  }

  startAspect(): 1 | 2 | null {
    const { modes, startMode } = this.state;
    if (!modes || startMode === null) return null;
    const a = modes.solutions[startMode].aspect;
    return a === 1 || a === 2 ? a : null;
  }

  addWaypoint(p: Waypoint): void {
    const snapped = this.snapPoint(p);
    this.patch({
      waypoints: [...this.state.waypoints, snapped],
      validation: this.pendingValidation(this.state.waypoints.length + 1),
    });
    this.scheduleValidation();
  }

  moveWaypoint(index: number, p: Waypoint): void {
    if (index < 0 || index >= this.state.waypoints.length) return;
    const snapped = this.snapPoint(p);
    const waypoints = this.state.waypoints.slice();
    waypoints[index] = snapped;
    this.patch({
      waypoints,
      validation: this.pendingValidation(waypoints.length),
    });
    this.scheduleValidation();
  }

  removeWaypoint(index: number): void {
    const waypoints = this.state.waypoints.filter((_, k) => k !== index);
    this.patch({
      waypoints,
      validation: waypoints.length
        ? this.pendingValidation(waypoints.length)
        : EMPTY_VALIDATION,
    });
    if (waypoints.length) this.scheduleValidation();
  }

  clearWaypoints(): void {
    this.patch({ waypoints: [], validation: EMPTY_VALIDATION });
  }

  private pendingValidation(nWaypoints: number): ValidationView {
    return {
      segments: new Array(nWaypoints + 1).fill("pending"),
      outcome: null,
      arrivalMode: null,
      margin: null,
      enclosedCount: null,
    };
  }

  /** The joint projection of start -> waypoints -> start (closed loop). */
  trajectory(): TrajectoryDoc | null {
    const { joint, waypoints } = this.state;
    if (!joint || waypoints.length === 0) return null;
    const pts: [number, number][] = [[joint[1], joint[2]]];
    for (const w of waypoints) {
      const prev = pts[pts.length - 1];
      if (Math.hypot(prev[0] - w.rho2, prev[1] - w.rho3) > 1e-12) {
        pts.push([w.rho2, w.rho3]);
      }
    }
    if (pts.length < 2) return null;
    return { rho1: joint[0], closed: true, waypoints: pts };
  }

  private scheduleValidation(): void {
    if (this.debounceHandle !== null) {
      this.clearTimeoutFn(this.debounceHandle);
    }
    this.debounceHandle = this.setTimeoutFn(() => {
      this.debounceHandle = null;
      void this.validateNow();
    }, this.debounceMs);
  }

  /** Fire the validation request for the current polyline (sequence-gated). */
  async validateNow(): Promise<void> {
    const traj = this.trajectory();
    const { startMode } = this.state;
    if (!traj || startMode === null) return;
    const ticket = ++this.seq;
    let doc: TraceDoc;
    try {
      doc = await this.client.trace(traj, startMode, 4);
    } catch (err) {
      if (ticket <= this.applied) return; // a newer response already landed
      this.applied = ticket;
      const detail =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.patch({
        validation: {
          ...this.pendingValidation(this.state.waypoints.length),
          outcome: null,
          margin: null,
          enclosedCount: null,
        },
        notice: `validation failed: ${detail}`,
      });
      return;
    }
    if (ticket <= this.applied) return; // stale response: discard
    this.applied = ticket;
    this.applyTrace(doc, traj);
  }

  private applyTrace(doc: TraceDoc, traj: TrajectoryDoc): void {
    const scale = this.geometryScale ?? 1.0;
    const nSegs = traj.waypoints.length; // closed: one segment per waypoint
    const segments: SegmentStatus[] = new Array(nSegs).fill("validated");
    let margin: number | null = null;
    if (doc.samples.length) {
      let m = Infinity;
      for (const s of doc.samples) m = Math.min(m, Math.abs(s[5]) / scale);
      margin = m;
    }
    if (doc.outcome === "SINGULAR_STOP") {
      const sStop = doc.samples.length ? doc.samples[doc.samples.length - 1][0] : 0;
      const segIdx = Math.min(nSegs - 1, Math.floor(sStop * nSegs));
      for (let k = 0; k < nSegs; k++) {
        segments[k] = k < segIdx ? "validated" : k === segIdx ? "crosses-boundary" : "pending";
      }
      // the branch died at a fold: report how far short the motion stopped
      margin = -(1 - sStop);
    }
    const enclosed = this.countEnclosedCusps(traj);
    this.patch({
      validation: {
        segments,
        outcome: doc.outcome,
        arrivalMode: doc.end_mode,
        margin,
        enclosedCount: enclosed,
      },
      notice: null,
    });
  }

  private countEnclosedCusps(traj: TrajectoryDoc): number {
    let count = 0;
    for (const c of this.state.cusps) {
      try {
        if (windingNumber(traj.waypoints, [c.rho2, c.rho3]) !== 0) count++;
      } catch {
        // on-boundary ambiguity: skip the marker
      }
    }
    return count;
  }

  /** Ask the planner and overlay its path. */
  async requestAutoPlan(
    fromMode: number,
    toMode: number,
    opts: { margin?: number; gridN?: number } = {},
  ): Promise<PlanResultDoc | null> {
    const { joint } = this.state;
    if (!joint) throw new Error("select a joint vector first");
    try {
      const doc = await this.client.plan(joint, fromMode, toMode, opts);
      this.patch({
        planOverlay: {
          polyline: doc.cs_polyline,
          enclosed: doc.enclosed_cusps,
          minMargin: doc.min_margin,
          fromMode,
          toMode,
        },
        notice: `${doc.enclosed_cusps.length} cusp${
          doc.enclosed_cusps.length === 1 ? "" : "s"
        } enclosed`,
      });
      return doc;
    } catch (err) {
      if (err instanceof ApiError && err.code === "NO_PATH") {
        this.patch({
          planOverlay: null,
          notice: "no path at this margin; try lowering the margin slider",
        });
        return null;
      }
      throw err;
    }
  }

  /** Replace the hand-drawn waypoints with a planner polyline. */
  adoptPlanWaypoints(doc: PlanResultDoc, stride = 8): void {
    const pts = doc.cs_polyline;
    const picked: Waypoint[] = [];
    for (let k = stride; k < pts.length - 1; k += stride) {
      picked.push({ rho2: pts[k][0], rho3: pts[k][1], theta1: pts[k][2] });
    }
    if (pts.length > 1) {
      const last = pts[pts.length - 2];
      const tail = picked[picked.length - 1];
      if (!tail || Math.hypot(tail.rho2 - last[0], tail.rho3 - last[1]) > 1e-9) {
        picked.push({ rho2: last[0], rho3: last[1], theta1: last[2] });
      }
    }
    this.patch({
      waypoints: picked,
      validation: this.pendingValidation(picked.length),
    });
    this.scheduleValidation();
  }
}
