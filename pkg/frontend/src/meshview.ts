/**
 * Pure conversions from service mesh documents to renderable buffers.
 *
 * Scene coordinates are (rho2, rho3, theta1 * Z_SCALE).  theta1 is periodic:
 * faces spanning the wrap seam would draw as full-height walls, so they are
 * filtered out here and the seam is marked by the renderer instead.
 */

import { CuspDoc, MeshDoc } from "./api.js";
import { angDist } from "./geometry.js";

export const Z_SCALE = 4.0; // stretches theta1 so the sheets separate visually

export interface SurfaceBuffers {
  positions: Float32Array; // 3 floats per vertex
  sValues: Float32Array; // normalized |S| per vertex, for boundary shading
  indices: Uint32Array; // 3 per triangle, seam faces removed
  droppedSeamFaces: number;
}

export function surfaceBuffers(mesh: MeshDoc, scale: number): SurfaceBuffers {
  const nv = mesh.vertices.length;
  const positions = new Float32Array(nv * 3);
  const sValues = new Float32Array(nv);
  for (let k = 0; k < nv; k++) {
    const v = mesh.vertices[k];
    positions[3 * k] = v[0];
    positions[3 * k + 1] = v[1];
    positions[3 * k + 2] = v[2] * Z_SCALE;
    sValues[k] = Math.abs(v[4]) / scale;
  }
  const kept: number[] = [];
  let dropped = 0;
  for (const [a, b, c] of mesh.faces) {
    const ta = mesh.vertices[a][2];
    const tb = mesh.vertices[b][2];
    const tc = mesh.vertices[c][2];
    // wrap-aware small angular spread but large raw spread = seam face
    const rawSpread = Math.max(ta, tb, tc) - Math.min(ta, tb, tc);
    const wrapSpread = Math.max(angDist(ta, tb), angDist(tb, tc), angDist(ta, tc));
    if (rawSpread > wrapSpread + 1e-9) {
      dropped++;
      continue;
    }
    kept.push(a, b, c);
  }
  return {
    positions,
    sValues,
    indices: new Uint32Array(kept),
    droppedSeamFaces: dropped,
  };
}

/** Boundary polylines as position runs (bold fold curves). */
export function boundaryBuffers(mesh: MeshDoc): Float32Array[] {
  const runs: Float32Array[] = [];
  for (const pl of mesh.boundary) {
    if (pl.length < 2) continue;
    const arr = new Float32Array(pl.length * 3);
    pl.forEach((vi, k) => {
      const v = mesh.vertices[vi];
      arr[3 * k] = v[0];
      arr[3 * k + 1] = v[1];
      arr[3 * k + 2] = v[2] * Z_SCALE;
    });
    runs.push(arr);
  }
  return runs;
}

export function cuspMarkerPositions(cusps: CuspDoc[]): Float32Array {
  const arr = new Float32Array(cusps.length * 3);
  cusps.forEach((c, k) => {
    arr[3 * k] = c.rho2;
    arr[3 * k + 1] = c.rho3;
    arr[3 * k + 2] = c.theta1 * Z_SCALE;
  });
  return arr;
}

/** Polyline in CS coordinates to scene positions. */
export function polylinePositions(points: [number, number, number][]): Float32Array {
  const arr = new Float32Array(points.length * 3);
  points.forEach((p, k) => {
    arr[3 * k] = p[0];
    arr[3 * k + 1] = p[1];
    arr[3 * k + 2] = p[2] * Z_SCALE;
  });
  return arr;
}
