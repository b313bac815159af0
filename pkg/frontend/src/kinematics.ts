/** Forward kinematics over the modified-DH table the gateway publishes in
 * /state, used to draw the arm without another round trip per pose event. */

import type { RobotModel } from "./types.js";

export type Vec3 = [number, number, number];
type Mat4 = Float64Array; // row-major 4x4

function identity(): Mat4 {
  const m = new Float64Array(16);
  m[0] = m[5] = m[10] = m[15] = 1;
  return m;
}

function matMul(a: Mat4, b: Mat4): Mat4 {
  const out = new Float64Array(16);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = s;
    }
  }
  return out;
}

/** One modified-DH link transform: Rx(alpha) * Tx(a) * Rz(theta) * Tz(d). */
function mdh(a: number, d: number, alpha: number, theta: number): Mat4 {
  const ct = Math.cos(theta);
  const st = Math.sin(theta);
  const ca = Math.cos(alpha);
  const sa = Math.sin(alpha);
  // prettier-ignore
  return Float64Array.from([
    ct,      -st,      0,   a,
    st * ca, ct * ca, -sa, -sa * d,
    st * sa, ct * sa,  ca,  ca * d,
    0,       0,        0,   1,
  ]);
}

/**
 * Positions of every frame origin along the chain: base, each joint frame,
 * and the flange. Length is dh.length + 2.
 */
export function chainPositions(robot: RobotModel, q: number[]): Vec3[] {
  if (q.length !== robot.dh.length) {
    throw new Error(`expected ${robot.dh.length} joint values, got ${q.length}`);
  }
  const points: Vec3[] = [[0, 0, 0]];
  let t = identity();
  robot.dh.forEach(([a, d, alpha], i) => {
    t = matMul(t, mdh(a, d, alpha, q[i]));
    points.push([t[3], t[7], t[11]]);
  });
  const [fa, fd, falpha, ftheta] = robot.flange;
  t = matMul(t, mdh(fa, fd, falpha, ftheta));
  points.push([t[3], t[7], t[11]]);
  return points;
}

/** End-effector (flange) position for a joint configuration. */
export function endEffector(robot: RobotModel, q: number[]): Vec3 {
  const points = chainPositions(robot, q);
  return points[points.length - 1];
}
