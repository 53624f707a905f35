/** Small planar/angular helpers for display logic (no kinematics). */

export function wrapAngle(a: number): number {
  const w = Math.atan2(Math.sin(a), Math.cos(a));
  return w <= -Math.PI ? Math.PI : w;
}

export function angDist(a: number, b: number): number {
  return Math.abs(Math.atan2(Math.sin(a - b), Math.cos(a - b)));
}

/**
 * Winding number of a closed polygon (implicit closing edge) around a point.
 * Used only to aggregate service-provided cusp coordinates into the
 * enclosed-count badge for hand-drawn paths.
 */
export function windingNumber(
  polygon: [number, number][],
  point: [number, number],
): number {
  let total = 0;
  const n = polygon.length;
  for (let k = 0; k < n; k++) {
    const a = polygon[k];
    const b = polygon[(k + 1) % n];
    const ux = a[0] - point[0];
    const uy = a[1] - point[1];
    const vx = b[0] - point[0];
    const vy = b[1] - point[1];
    total += Math.atan2(ux * vy - uy * vx, ux * vx + uy * vy);
  }
  return Math.round(total / (2 * Math.PI));
}
