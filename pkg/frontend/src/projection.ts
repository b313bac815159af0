/** Orthographic projections for the two arm views (side and top). */

import type { Vec3 } from "./kinematics.js";

export interface Viewport {
  width: number;
  height: number;
  /** Fraction of the canvas left empty around the drawing. */
  margin?: number;
}

export type View = "side" | "top";

/** Pick the two world axes for a view: side = (y, z), top = (y, x). */
export function planeOf(p: Vec3, view: View): [number, number] {
  return view === "side" ? [p[1], p[2]] : [p[1], p[0]];
}

/**
 * Map world points onto canvas pixels, preserving aspect ratio and flipping
 * the vertical axis (canvas y grows downward). The world window is derived
 * from `extent` (meters from the origin in every direction) so consecutive
 * frames don't rescale as the arm moves.
 */
export function project(
  points: Vec3[],
  view: View,
  viewport: Viewport,
  extent = 1.0,
): [number, number][] {
  const margin = viewport.margin ?? 0.08;
  const usableW = viewport.width * (1 - 2 * margin);
  const usableH = viewport.height * (1 - 2 * margin);
  const scale = Math.min(usableW, usableH) / (2 * extent);
  const cx = viewport.width / 2;
  const cy = viewport.height / 2;
  return points.map((p) => {
    const [u, v] = planeOf(p, view);
    return [cx + u * scale, cy - v * scale];
  });
}
