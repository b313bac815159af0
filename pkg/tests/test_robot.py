import math

import numpy as np
import pytest

from puppeteer.pipeline import ColorTarget
from puppeteer.robot import (EE_SPEED, PANDA_FLANGE, PANDA_LIMITS, Q_HOME,
                             SAMPLE_RATE, SMOOTHNESS_BOUND, TOOL_DOWN,
                             KinematicParams, OutOfLimits, PathInfeasible,
                             Trajectory, UnreachableTarget,
                             default_target_table, forward_kinematics,
                             jacobian, plan_trajectory, solve_ik)

PARAMS = KinematicParams()
RNG = np.random.default_rng(7)


def random_config(rng=RNG, margin=0.0):
    lo, hi = PANDA_LIMITS[:, 0] + margin, PANDA_LIMITS[:, 1] - margin
    return rng.uniform(lo, hi)


def oracle_fk(q):
    """Independent transform-chain oracle: Rx(alpha) Tx(a) Rz(theta) Tz(d)."""
    def rx(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1.0]])

    def rz(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])

    def trans(x, y, z):
        m = np.eye(4)
        m[:3, 3] = (x, y, z)
        return m

    t = np.eye(4)
    for (a, d, alpha), qi in zip(PARAMS.dh, q):
        t = t @ rx(alpha) @ trans(a, 0, 0) @ rz(qi) @ trans(0, 0, d)
    fa, fd, falpha, ftheta = PANDA_FLANGE
    return t @ rx(falpha) @ trans(fa, 0, 0) @ rz(ftheta) @ trans(0, 0, fd)


# golden vectors frozen from the oracle above
HOME_POS = np.array([0.3070195700516, 0.0, 0.5902695582766])
Q2 = np.array([0.5, -1.0, 0.3, -2.0, 0.1, 1.8, 0.2])
Q2_POS = np.array([0.079648530137, 0.231530358991, 0.816934694311])


def test_fk_home_golden():
    pose = forward_kinematics(Q_HOME, PARAMS)
    assert np.linalg.norm(pose.position) < 1.2
    np.testing.assert_allclose(pose.position, HOME_POS, atol=1e-10)
    np.testing.assert_allclose(pose.position, oracle_fk(Q_HOME)[:3, 3], atol=1e-12)


def test_fk_second_golden():
    pose = forward_kinematics(Q2, PARAMS)
    np.testing.assert_allclose(pose.position, Q2_POS, atol=1e-10)
    np.testing.assert_allclose(pose.rotation, oracle_fk(Q2)[:3, :3], atol=1e-12)


def test_fk_matches_oracle_on_random_configs():
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = random_config(rng)
        np.testing.assert_allclose(
            forward_kinematics(q, PARAMS).position, oracle_fk(q)[:3, 3], atol=1e-12)


def test_fk_deterministic():
    q = random_config(np.random.default_rng(5))
    a = forward_kinematics(q, PARAMS)
    b = forward_kinematics(q, PARAMS)
    assert np.array_equal(a.position, b.position)
    assert np.array_equal(a.orientation, b.orientation)


def test_fk_joint1_preserves_height_and_radius():
    q = Q_HOME.copy()
    q2 = q.copy()
    q2[0] += 0.7
    p1 = forward_kinematics(q, PARAMS).position
    p2 = forward_kinematics(q2, PARAMS).position
    assert p1[2] == pytest.approx(p2[2], abs=1e-12)
    assert math.hypot(*p1[:2]) == pytest.approx(math.hypot(*p2[:2]), abs=1e-12)


def test_fk_rejects_out_of_limits():
    q = Q_HOME.copy()
    q[1] = 3.0
    with pytest.raises(OutOfLimits):
        forward_kinematics(q, PARAMS)


def test_quaternion_unit_norm():
    pose = forward_kinematics(Q2, PARAMS)
    assert abs(np.linalg.norm(pose.orientation) - 1.0) <= 1e-9


# -- jacobian ---------------------------------------------------------------

def fd_position_jacobian(q, eps=1e-6):
    base = forward_kinematics(q, PARAMS, check=False).position
    cols = []
    for i in range(7):
        dq = q.copy()
        dq[i] += eps
        cols.append((forward_kinematics(dq, PARAMS, check=False).position - base) / eps)
    return np.stack(cols, axis=1)


def test_jacobian_position_rows_match_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(25):
        q = random_config(rng, margin=1e-3)
        np.testing.assert_allclose(
            jacobian(q, PARAMS)[:3], fd_position_jacobian(q), atol=1e-5)


def test_jacobian_no_zero_column_at_home():
    j = jacobian(Q_HOME, PARAMS)
    assert all(np.linalg.norm(j[:, i]) > 1e-9 for i in range(7))


def test_jacobian_joint7_angular_part_is_axis():
    from puppeteer.robot import _frames
    q = random_config(np.random.default_rng(13))
    j = jacobian(q, PARAMS)
    axis = _frames(q, PARAMS)[6][:3, 2]
    np.testing.assert_allclose(j[3:, 6], axis, atol=1e-12)


# -- inverse kinematics -------------------------------------------------------

def test_ik_fixed_point():
    pose = forward_kinematics(Q_HOME, PARAMS)
    q = solve_ik(pose.position, pose.rotation, Q_HOME, PARAMS)
    np.testing.assert_allclose(q, Q_HOME, atol=1e-9)


def test_ik_random_targets_small_sample():
    rng = np.random.default_rng(21)
    ok = 0
    for _ in range(20):
        target = forward_kinematics(random_config(rng), PARAMS)
        try:
            q = solve_ik(target.position, target.rotation, Q_HOME, PARAMS)
        except UnreachableTarget:
            continue
        PARAMS.check_limits(q)
        err = np.linalg.norm(
            forward_kinematics(q, PARAMS, check=False).position - target.position)
        assert err < 1e-4
        ok += 1
    assert ok >= 19


def test_ik_unreachable_raises():
    with pytest.raises(UnreachableTarget):
        solve_ik(np.array([3.0, 0.0, 0.0]), TOOL_DOWN, Q_HOME, PARAMS)


def test_ik_rejects_out_of_limit_seed():
    seed = Q_HOME.copy()
    seed[3] = 0.5
    with pytest.raises(OutOfLimits):
        solve_ik(HOME_POS, TOOL_DOWN, seed, PARAMS)


# -- trajectory planning --------------------------------------------------------

def test_plan_waypoint_count_formula():
    # start EE at (0.3, 0, 0.5), target at (0.3, 0.4, 0.1):
    # distance sqrt(0.32), duration ~2.263 s, 228 waypoints
    start = solve_ik(np.array([0.3, 0.0, 0.5]), TOOL_DOWN, Q_HOME, PARAMS)
    table = {ColorTarget.RED: np.array([0.3, 0.4, 0.1])}
    traj = plan_trajectory(start, ColorTarget.RED, table, PARAMS)
    dist = math.sqrt(0.32)
    assert len(traj) == math.ceil(dist / EE_SPEED * SAMPLE_RATE) + 1 == 228


def test_plan_zero_length_path():
    p = forward_kinematics(Q_HOME, PARAMS).position
    table = {ColorTarget.GREEN: p.copy()}
    traj = plan_trajectory(Q_HOME, ColorTarget.GREEN, table, PARAMS)
    assert len(traj) == 1
    assert traj.waypoints[0][1] == 0.0


@pytest.mark.parametrize("color", list(ColorTarget))
def test_plan_all_colors_from_home(color):
    traj = plan_trajectory(Q_HOME, color, None, PARAMS)
    table = default_target_table()

    # endpoint within 1e-3 m of the color target
    end = forward_kinematics(traj.waypoints[-1][0], PARAMS, check=False).position
    assert np.linalg.norm(end - table[color]) < 1e-3

    # monotone time starting at 0
    times = [t for _, t in traj.waypoints]
    assert times[0] == 0.0
    assert all(b > a for a, b in zip(times, times[1:]))

    # smoothness bound
    for (qa, _), (qb, _) in zip(traj.waypoints, traj.waypoints[1:]):
        assert np.max(np.abs(np.asarray(qb) - np.asarray(qa))) < SMOOTHNESS_BOUND

    # constant Cartesian spacing except the final partial step
    step = EE_SPEED / SAMPLE_RATE
    positions = [forward_kinematics(q, PARAMS, check=False).position
                 for q, _ in traj.waypoints]
    gaps = [np.linalg.norm(b - a) for a, b in zip(positions, positions[1:])]
    for gap in gaps[:-1]:
        assert gap == pytest.approx(step, abs=2e-4)  # ik tolerance per sample
    assert gaps[-1] <= step + 2e-4


def test_plan_unknown_color_errors():
    with pytest.raises(KeyError):
        plan_trajectory(Q_HOME, ColorTarget.RED, {}, PARAMS)
