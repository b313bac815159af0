"""7-DOF serial-arm kinematics for the virtual Franka-style arm.

Forward kinematics and the geometric Jacobian follow the modified DH
convention (Craig). Inverse kinematics is damped least squares with a
per-joint step clamp and joint-limit clamping each iteration. Trajectories
are straight Cartesian segments at constant end-effector speed, converted
to joint space waypoint by waypoint.

The default parameter table is the publicly documented Franka Panda
modified-DH table (franka.de datasheet); rows are (a, d, alpha, theta_off).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pipeline import ColorTarget

# Franka Panda modified DH, one row per joint: (a [m], d [m], alpha [rad]).
PANDA_DH = np.array([
    # a        d       alpha
    [0.0,      0.333,  0.0],
    [0.0,      0.0,   -math.pi / 2],
    [0.0,      0.316,  math.pi / 2],
    [0.0825,   0.0,    math.pi / 2],
    [-0.0825,  0.384, -math.pi / 2],
    [0.0,      0.0,    math.pi / 2],
    [0.088,    0.0,    math.pi / 2],
])
# Fixed flange frame after joint 7 (a, d, alpha, theta).
PANDA_FLANGE = (0.0, 0.107, 0.0, 0.0)

PANDA_LIMITS = np.array([
    [-2.8973, 2.8973],
    [-1.7628, 1.7628],
    [-2.8973, 2.8973],
    [-3.0718, -0.0698],
    [-2.8973, 2.8973],
    [-0.0175, 3.7525],
    [-2.8973, 2.8973],
])

Q_HOME = np.array([0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785])

# Tool pointing straight down (z-axis of the EE frame = -z of base), with
# the yaw of the home ready pose so paths from home need no initial twist.
_S = math.sqrt(0.5)
TOOL_DOWN = np.array([
    [_S, -_S, 0.0],
    [-_S, -_S, 0.0],
    [0.0, 0.0, -1.0],
])

EE_SPEED = 0.25       # m/s along the Cartesian segment
SAMPLE_RATE = 100     # Hz
SMOOTHNESS_BOUND = 0.1  # rad, max per-joint delta between waypoints


class OutOfLimits(ValueError):
    def __init__(self, joints):
        super().__init__(f"joints out of limits: {joints}")
        self.joints = joints


class UnreachableTarget(ValueError):
    pass


class PathInfeasible(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KinematicParams:
    dh: np.ndarray = field(default_factory=lambda: PANDA_DH.copy())
    flange: tuple = PANDA_FLANGE
    limits: np.ndarray = field(default_factory=lambda: PANDA_LIMITS.copy())
    theta_offsets: np.ndarray = field(default_factory=lambda: np.zeros(7))

    def check_limits(self, q: np.ndarray):
        q = np.asarray(q, dtype=float)
        bad = [i for i in range(7)
               if not (self.limits[i, 0] <= q[i] <= self.limits[i, 1])]
        if bad:
            raise OutOfLimits(bad)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.limits[:, 0], self.limits[:, 1])


@dataclass(frozen=True, eq=False)
class EePose:
    position: np.ndarray      # (3,)
    orientation: np.ndarray   # unit quaternion (w, x, y, z)
    rotation: np.ndarray = None  # (3,3), cached

    def __post_init__(self):
        n = np.linalg.norm(self.orientation)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {n} != 1")


def _mdh_transform(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [ct, -st, 0.0, a],
        [st * ca, ct * ca, -sa, -sa * d],
        [st * sa, ct * sa, ca, ca * d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _rot_to_quat(r: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0."""
    t = np.trace(r)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s,
                      (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s,
                      (r[1, 0] - r[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(1.0 + r[i, i] - r[j, j] - r[k, k]) * 2
        q = np.empty(4)
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def _frames(q: np.ndarray, params: KinematicParams) -> list[np.ndarray]:
    """Cumulative transforms base->joint_i for i = 1..7, plus base->flange."""
    t = np.eye(4)
    frames = []
    for i in range(7):
        a, d, alpha = params.dh[i]
        t = t @ _mdh_transform(a, d, alpha, q[i] + params.theta_offsets[i])
        frames.append(t)
    fa, fd, falpha, ftheta = params.flange
    frames.append(t @ _mdh_transform(fa, fd, falpha, ftheta))
    return frames


def forward_kinematics(q, params: KinematicParams = None, check: bool = True) -> EePose:
    """End-effector pose in the base frame."""
    params = params or KinematicParams()
    q = np.asarray(q, dtype=float)
    if check:
        params.check_limits(q)
    t = _frames(q, params)[-1]
    return EePose(position=t[:3, 3].copy(),
                  orientation=_rot_to_quat(t[:3, :3]),
                  rotation=t[:3, :3].copy())


def jacobian(q, params: KinematicParams = None, check: bool = True) -> np.ndarray:
    """Geometric Jacobian (6x7): linear velocity rows then angular rows."""
    params = params or KinematicParams()
    q = np.asarray(q, dtype=float)
    if check:
        params.check_limits(q)
    frames = _frames(q, params)
    p_ee = frames[-1][:3, 3]
    jac = np.zeros((6, 7))
    for i in range(7):
        # modified DH: joint i rotates about the z-axis of frame i
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        jac[:3, i] = np.cross(z, p_ee - p)
        jac[3:, i] = z
    return jac


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def _orientation_error(r_target: np.ndarray, r_current: np.ndarray) -> np.ndarray:
    """Rotation vector taking r_current to r_target (quaternion log map)."""
    qt = _rot_to_quat(r_target)
    qc = _rot_to_quat(r_current)
    qe = _quat_mul(qt, qc * np.array([1.0, -1.0, -1.0, -1.0]))
    if qe[0] < 0:
        qe = -qe
    v = qe[1:]
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return np.zeros(3)
    return v / nv * (2.0 * math.atan2(nv, qe[0]))


DLS_LAMBDA = 0.05
STEP_CLAMP = 0.1
POS_TOL = 1e-4
ORI_TOL = 1e-3
MAX_ITERS = 200


def _pose_error(q, target_position, target_rotation, params) -> np.ndarray:
    t = _frames(q, params)[-1]
    e = np.empty(6)
    e[:3] = target_position - t[:3, 3]
    e[3:] = _orientation_error(target_rotation, t[:3, :3])
    return e


def _converged(e: np.ndarray) -> bool:
    return (np.linalg.norm(e[:3]) < POS_TOL
            and np.linalg.norm(e[3:]) < ORI_TOL)


def _dls_iterate(target_position, target_rotation, seed, params,
                 damping, step_clamp, max_iters):
    q = np.asarray(seed, dtype=float).copy()
    lam2 = damping * damping
    for _ in range(max_iters + 1):
        e = _pose_error(q, target_position, target_rotation, params)
        if _converged(e):
            return q
        jac = jacobian(q, params, check=False)
        dq = jac.T @ np.linalg.solve(jac @ jac.T + lam2 * np.eye(6), e)
        dq = np.clip(dq, -step_clamp, step_clamp)
        q = params.clamp(q + dq)
    return None


FALLBACK_RESTARTS = 25


def _bounded_lsq(target_position, target_rotation, seed, params):
    """Restart fallback: bounded trust-region least squares on the 6D error.

    Deterministic restart seeds; used only when the DLS iteration stalls
    (far targets in awkward joint-limit pockets).
    """
    from scipy.optimize import least_squares

    lo, hi = params.limits[:, 0], params.limits[:, 1]

    def resid(q):
        e = _pose_error(q, target_position, target_rotation, params)
        e[3:] *= 0.5  # balance radians against meters
        return e

    rng = np.random.default_rng(12345)
    base = np.clip(np.asarray(seed, dtype=float), lo, hi)
    for k in range(FALLBACK_RESTARTS):
        if k == 0:
            x0 = base
        elif k <= 15:
            # stay near the seed first: growing perturbations keep the
            # returned solution close when a nearby branch exists
            x0 = np.clip(base + rng.normal(0.0, 0.05 * k, size=7), lo, hi)
        else:
            x0 = rng.uniform(lo, hi)
        res = least_squares(resid, x0, bounds=(lo, hi),
                            xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=150)
        e = _pose_error(res.x, target_position, target_rotation, params)
        if _converged(e):
            return res.x
    return None


def solve_ik(target_position, target_rotation, seed, params: KinematicParams = None,
             damping: float = DLS_LAMBDA, step_clamp: float = STEP_CLAMP,
             max_iters: int = MAX_ITERS) -> np.ndarray:
    """Inverse kinematics toward (position, rotation matrix).

    Primary path is damped least squares: dq = J^T (J J^T + lambda^2 I)^-1 e,
    clamped to step_clamp per joint and to joint limits each iteration, with
    convergence at position error < 1e-4 m and orientation error < 1e-3 rad
    within max_iters iterations. If that stalls, a bounded least-squares
    solve with deterministic restarts takes over before giving up.
    """
    params = params or KinematicParams()
    target_position = np.asarray(target_position, dtype=float)
    target_rotation = np.asarray(target_rotation, dtype=float)
    params.check_limits(seed)

    q = _dls_iterate(target_position, target_rotation, seed, params,
                     damping, step_clamp, max_iters)
    if q is None:
        q = _bounded_lsq(target_position, target_rotation, seed, params)
    if q is None:
        raise UnreachableTarget(f"no convergence to {target_position}")
    return q


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Joint-space waypoints (q_i, t_i) sampled at a fixed rate."""

    waypoints: tuple           # of (np.ndarray(7), float seconds)
    sample_rate: int = SAMPLE_RATE

    @property
    def duration(self) -> float:
        return self.waypoints[-1][1]

    def __len__(self):
        return len(self.waypoints)


def default_target_table() -> dict[ColorTarget, np.ndarray]:
    """Six colors on a semicircle (r = 0.45 m, z = 0.10 m); black at the
    arc midpoint, reserved for the tutorial."""
    colors = [ColorTarget.RED, ColorTarget.BLUE, ColorTarget.ORANGE,
              ColorTarget.YELLOW, ColorTarget.PURPLE, ColorTarget.GREEN]
    angles = np.linspace(-math.pi / 2, math.pi / 2, len(colors))
    table = {
        c: np.array([0.45 * math.cos(a), 0.45 * math.sin(a), 0.10])
        for c, a in zip(colors, angles)
    }
    table[ColorTarget.BLACK] = np.array([0.45, 0.0, 0.10])
    return table


def plan_trajectory(start, color: ColorTarget, table: dict = None,
                    params: KinematicParams = None,
                    speed: float = EE_SPEED, rate: int = SAMPLE_RATE) -> Trajectory:
    """Straight Cartesian segment to the color's position at constant speed.

    Each sample is converted to joints via IK seeded with the previous
    waypoint; any IK failure aborts the whole plan (no partial result).
    """
    params = params or KinematicParams()
    table = table if table is not None else default_target_table()
    if color not in table:
        raise KeyError(f"no target position for {color}")
    start = np.asarray(start, dtype=float)
    params.check_limits(start)

    p0 = forward_kinematics(start, params).position
    p1 = np.asarray(table[color], dtype=float)
    dist = float(np.linalg.norm(p1 - p0))
    if dist < 1e-12:
        return Trajectory(waypoints=((start.copy(), 0.0),), sample_rate=rate)

    duration = dist / speed
    count = math.ceil(duration * rate) + 1
    direction = (p1 - p0) / dist
    step = speed / rate

    waypoints = [(start.copy(), 0.0)]
    q = start.copy()
    for k in range(1, count):
        s = min(k * step, dist)
        target = p0 + direction * s
        try:
            q = solve_ik(target, TOOL_DOWN, q, params)
        except (UnreachableTarget, OutOfLimits) as exc:
            raise PathInfeasible(
                f"ik failed at waypoint {k}/{count} toward {color.value}: {exc}"
            ) from exc
        if np.max(np.abs(q - waypoints[-1][0])) >= SMOOTHNESS_BOUND:
            raise PathInfeasible(
                f"joint jump >= {SMOOTHNESS_BOUND} rad at waypoint {k} toward {color.value}")
        waypoints.append((q, k / rate))
    return Trajectory(waypoints=tuple(waypoints), sample_rate=rate)
