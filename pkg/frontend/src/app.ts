/**
 * Browser entry point: three.js scene + control panel wired to the store.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import { AtlasClient } from "./api.js";
import { ExplorerStore, SceneState, Waypoint } from "./state.js";
import {
  Z_SCALE,
  boundaryBuffers,
  cuspMarkerPositions,
  polylinePositions,
  surfaceBuffers,
} from "./meshview.js";

const ASPECT_COLORS: Record<1 | 2, number> = { 1: 0x4488cc, 2: 0xcc8844 };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

class ExplorerApp {
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private controls: OrbitControls;
  private raycaster = new THREE.Raycaster();
  private surfaceGroups: Record<1 | 2, THREE.Group> = {
    1: new THREE.Group(),
    2: new THREE.Group(),
  };
  private cuspGroup = new THREE.Group();
  private waypointGroup = new THREE.Group();
  private pathGroup = new THREE.Group();
  private planGroup = new THREE.Group();
  private modeGroup = new THREE.Group();
  private dragIndex: number | null = null;
  private scale = 25.91;

  constructor(
    private store: ExplorerStore,
    private canvas: HTMLCanvasElement,
  ) {
    this.camera = new THREE.PerspectiveCamera(
      50,
      canvas.clientWidth / canvas.clientHeight,
      0.1,
      2000,
    );
    this.camera.position.set(60, -40, 55);
    this.camera.up.set(0, 0, 1);
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setSize(canvas.clientWidth, canvas.clientHeight, false);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(21, 21, 0);
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(40, -60, 80);
    this.scene.add(sun);
    this.scene.add(
      this.surfaceGroups[1],
      this.surfaceGroups[2],
      this.cuspGroup,
      this.waypointGroup,
      this.pathGroup,
      this.planGroup,
      this.modeGroup,
    );
    this.addSeamMarker();
    canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    canvas.addEventListener("pointerup", () => (this.dragIndex = null));
    store.subscribe((s) => this.sync(s));
    this.animate();
  }

  private addSeamMarker(): void {
    // theta1 = +-pi is one circle on the torus: mark both chart edges
    for (const z of [-Math.PI * Z_SCALE, Math.PI * Z_SCALE]) {
      const geo = new THREE.BufferGeometry().setFromPoints([
        new THREE.Vector3(0, 0, z),
        new THREE.Vector3(45, 0, z),
        new THREE.Vector3(45, 45, z),
        new THREE.Vector3(0, 45, z),
        new THREE.Vector3(0, 0, z),
      ]);
      const line = new THREE.Line(
        geo,
        new THREE.LineDashedMaterial({ color: 0x777777, dashSize: 1, gapSize: 1 }),
      );
      line.computeLineDistances();
      this.scene.add(line);
    }
  }

  private animate = (): void => {
    requestAnimationFrame(this.animate);
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  };

  async start(): Promise<void> {
    this.scale = await this.store.ensureScale();
    await this.store.loadSlice(17.0);
    await this.store.selectJoint([17.0, 19.0, 17.0]);
  }

  // ---- store -> scene ----

  private sync(s: SceneState): void {
    this.syncSurfaces(s);
    this.syncCusps(s);
    this.syncModes(s);
    this.syncWaypoints(s);
    this.syncPlan(s);
    this.syncPanel(s);
  }

  private clearGroup(group: THREE.Group): void {
    while (group.children.length) {
      const child = group.children.pop()!;
      (child as THREE.Mesh).geometry?.dispose?.();
    }
  }

  private surfacesBuilt: { 1: boolean; 2: boolean } = { 1: false, 2: false };

  private syncSurfaces(s: SceneState): void {
    for (const aspect of [1, 2] as const) {
      const mesh = s.meshes[aspect];
      const group = this.surfaceGroups[aspect];
      group.visible = s.meshVisible[aspect];
      if (!mesh || this.surfacesBuilt[aspect]) continue;
      this.surfacesBuilt[aspect] = true;
      const buf = surfaceBuffers(mesh, this.scale);
      const geo = new THREE.BufferGeometry();
      geo.setAttribute("position", new THREE.BufferAttribute(buf.positions, 3));
      geo.setIndex(new THREE.BufferAttribute(buf.indices, 1));
      geo.computeVertexNormals();
      const mat = new THREE.MeshStandardMaterial({
        color: ASPECT_COLORS[aspect],
        side: THREE.DoubleSide,
        transparent: true,
        opacity: 0.55,
        roughness: 0.8,
      });
      const surf = new THREE.Mesh(geo, mat);
      surf.userData.aspect = aspect;
      group.add(surf);
      for (const run of boundaryBuffers(mesh)) {
        const lineGeo = new THREE.BufferGeometry();
        lineGeo.setAttribute("position", new THREE.BufferAttribute(run, 3));
        group.add(
          new THREE.Line(
            lineGeo,
            new THREE.LineBasicMaterial({ color: 0x000000, linewidth: 3 }),
          ),
        );
      }
    }
  }

  private syncCusps(s: SceneState): void {
    this.clearGroup(this.cuspGroup);
    if (!s.cusps.length) return;
    const positions = cuspMarkerPositions(s.cusps);
    for (let k = 0; k < s.cusps.length; k++) {
      const marker = new THREE.Mesh(
        new THREE.SphereGeometry(0.45, 12, 12),
        new THREE.MeshBasicMaterial({ color: 0xff3333 }),
      );
      marker.position.fromArray(positions, 3 * k);
      this.cuspGroup.add(marker);
    }
  }

  private syncModes(s: SceneState): void {
    this.clearGroup(this.modeGroup);
    if (!s.modes || !s.joint) return;
    s.modes.solutions.forEach((sol, idx) => {
      const selected = idx === s.startMode;
      const m = new THREE.Mesh(
        new THREE.SphereGeometry(selected ? 0.6 : 0.4, 12, 12),
        new THREE.MeshBasicMaterial({
          color:
            s.validation.arrivalMode === idx
              ? 0x33ff66
              : selected
                ? 0xffff44
                : 0xffffff,
        }),
      );
      m.position.set(s.joint![1], s.joint![2], sol.pose.theta1 * Z_SCALE);
      m.userData.modeIndex = idx;
      this.modeGroup.add(m);
    });
  }

  private syncWaypoints(s: SceneState): void {
    this.clearGroup(this.waypointGroup);
    this.clearGroup(this.pathGroup);
    const statusColor: Record<string, number> = {
      validated: 0x33cc66,
      "crosses-boundary": 0xee3344,
      pending: 0x999999,
    };
    s.waypoints.forEach((w, k) => {
      const marker = new THREE.Mesh(
        new THREE.SphereGeometry(0.5, 10, 10),
        new THREE.MeshBasicMaterial({ color: 0x44ddff }),
      );
      marker.position.set(w.rho2, w.rho3, w.theta1 * Z_SCALE);
      marker.userData.waypointIndex = k;
      this.waypointGroup.add(marker);
    });
    if (!s.joint || !s.modes || s.startMode === null || !s.waypoints.length) return;
    const start = s.modes.solutions[s.startMode];
    const loop: [number, number, number][] = [
      [s.joint[1], s.joint[2], start.pose.theta1],
      ...s.waypoints.map((w) => [w.rho2, w.rho3, w.theta1] as [number, number, number]),
      [s.joint[1], s.joint[2], start.pose.theta1],
    ];
    for (let k = 0; k + 1 < loop.length; k++) {
      const status = s.validation.segments[k] ?? "pending";
      const geo = new THREE.BufferGeometry();
      geo.setAttribute(
        "position",
        new THREE.BufferAttribute(polylinePositions([loop[k], loop[k + 1]]), 3),
      );
      this.pathGroup.add(
        new THREE.Line(
          geo,
          new THREE.LineBasicMaterial({ color: statusColor[status] }),
        ),
      );
    }
  }

  private syncPlan(s: SceneState): void {
    this.clearGroup(this.planGroup);
    if (!s.planOverlay) return;
    const geo = new THREE.BufferGeometry();
    geo.setAttribute(
      "position",
      new THREE.BufferAttribute(polylinePositions(s.planOverlay.polyline), 3),
    );
    this.planGroup.add(
      new THREE.Line(geo, new THREE.LineBasicMaterial({ color: 0xff66ff })),
    );
  }

  private syncPanel(s: SceneState): void {
    el<HTMLDivElement>("banner").textContent = s.errorBanner ?? "";
    el<HTMLDivElement>("banner").style.display = s.errorBanner ? "block" : "none";
    el<HTMLDivElement>("notice").textContent = s.notice ?? "";
    const b1 = s.buildProgress[1];
    const b2 = s.buildProgress[2];
    el<HTMLDivElement>("progress").textContent =
      b1 !== null || b2 !== null
        ? `building surfaces: ${(((b1 ?? 0) + (b2 ?? 0)) * 50).toFixed(0)}%`
        : "";
    const v = s.validation;
    el<HTMLDivElement>("margin").textContent =
      v.margin === null ? "margin: -" : `margin: ${v.margin.toFixed(4)}`;
    el<HTMLDivElement>("enclosed").textContent =
      v.enclosedCount === null ? "" : `${v.enclosedCount} cusp(s) enclosed`;
    el<HTMLDivElement>("outcome").textContent = v.outcome
      ? `outcome: ${v.outcome}${v.arrivalMode !== null ? ` -> mode ${v.arrivalMode}` : ""}`
      : "";
    const modeList = el<HTMLDivElement>("modes");
    modeList.innerHTML = "";
    s.modes?.solutions.forEach((sol, idx) => {
      const btn = document.createElement("button");
      btn.textContent = `mode ${idx} (aspect ${sol.aspect}, th1 ${sol.pose.theta1.toFixed(2)})`;
      btn.className = idx === s.startMode ? "selected" : "";
      btn.onclick = () => this.store.selectStartMode(idx);
      modeList.appendChild(btn);
    });
  }

  // ---- pointer interaction ----

  private pointerRay(event: PointerEvent): THREE.Raycaster {
    const rect = this.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((event.clientX - rect.left) / rect.width) * 2 - 1,
      -((event.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    return this.raycaster;
  }

  private onPointerDown(event: PointerEvent): void {
    const ray = this.pointerRay(event);
    const modeHit = ray.intersectObjects(this.modeGroup.children)[0];
    if (modeHit) {
      this.store.selectStartMode(modeHit.object.userData.modeIndex as number);
      return;
    }
    const wpHit = ray.intersectObjects(this.waypointGroup.children)[0];
    if (wpHit) {
      this.dragIndex = wpHit.object.userData.waypointIndex as number;
      this.controls.enabled = false;
      return;
    }
    if (!event.shiftKey) return; // plain click orbits; shift-click places
    const surfaces = [
      ...this.surfaceGroups[1].children,
      ...this.surfaceGroups[2].children,
    ].filter((o) => (o as THREE.Mesh).isMesh);
    const hit = ray.intersectObjects(surfaces)[0];
    if (hit) {
      this.store.addWaypoint(this.toWaypoint(hit.point));
    }
  }

  private onPointerMove(event: PointerEvent): void {
    if (this.dragIndex === null) return;
    const ray = this.pointerRay(event);
    const surfaces = [
      ...this.surfaceGroups[1].children,
      ...this.surfaceGroups[2].children,
    ].filter((o) => (o as THREE.Mesh).isMesh);
    const hit = ray.intersectObjects(surfaces)[0];
    if (hit) {
      this.store.moveWaypoint(this.dragIndex, this.toWaypoint(hit.point));
    }
    if (!event.buttons) {
      this.dragIndex = null;
      this.controls.enabled = true;
    }
  }

  private toWaypoint(p: THREE.Vector3): Waypoint {
    return { rho2: p.x, rho3: p.y, theta1: p.z / Z_SCALE };
  }
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8777";
  const client = new AtlasClient(base);
  const store = new ExplorerStore(client);
  const app = new ExplorerApp(store, el<HTMLCanvasElement>("view"));

  el<HTMLButtonElement>("toggle1").onclick = () => store.toggleAspect(1);
  el<HTMLButtonElement>("toggle2").onclick = () => store.toggleAspect(2);
  el<HTMLButtonElement>("clear").onclick = () => store.clearWaypoints();
  el<HTMLInputElement>("snap").onchange = (e) =>
    store.setSnap((e.target as HTMLInputElement).checked);
  el<HTMLButtonElement>("plan").onclick = async () => {
    const from = parseInt(el<HTMLInputElement>("from-mode").value, 10);
    const to = parseInt(el<HTMLInputElement>("to-mode").value, 10);
    const margin = parseFloat(el<HTMLInputElement>("margin-slider").value);
    const doc = await store.requestAutoPlan(from, to, { margin });
    if (doc) {
      store.adoptPlanWaypoints(doc);
      store.selectStartMode(from);
    }
  };
  try {
    await app.start();
  } catch (err) {
    el<HTMLDivElement>("banner").textContent = `service unreachable: ${err}`;
    el<HTMLDivElement>("banner").style.display = "block";
    el<HTMLButtonElement>("retry").style.display = "inline";
    el<HTMLButtonElement>("retry").onclick = () => location.reload();
  }
}

boot();
