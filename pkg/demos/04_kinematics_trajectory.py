"""Arm model: forward kinematics, damped least-squares IK, and straight-line
trajectory planning toward each colored target.

Run:  python demos/04_kinematics_trajectory.py
"""

import numpy as np

from puppeteer import robot
from puppeteer.pipeline import ColorTarget

np.set_printoptions(precision=4, suppress=True)

# -- forward kinematics at the home configuration -----------------------------

pose = robot.forward_kinematics(robot.Q_HOME)
print(f"home q        {robot.Q_HOME}")
print(f"home EE pos   {pose.position}")
print(f"home EE quat  {pose.orientation}  (w, x, y, z)")

# -- inverse kinematics round trip --------------------------------------------

rng = np.random.default_rng(3)
q_rand = rng.uniform(robot.PANDA_LIMITS[:, 0], robot.PANDA_LIMITS[:, 1])
target = robot.forward_kinematics(q_rand)
q_sol = robot.solve_ik(target.position, target.rotation, robot.Q_HOME)
reached = robot.forward_kinematics(q_sol).position
print(f"\nik target     {target.position}")
print(f"ik reached    {reached}   (err {np.linalg.norm(reached - target.position):.2e} m)")

# -- trajectories to every color ----------------------------------------------

table = robot.default_target_table()
print(f"\ntargets (r = 0.45 m semicircle, z = 0.10 m):")
for color, p in table.items():
    print(f"  {color.value:7s} {p}")

print(f"\nplans from home at {robot.EE_SPEED} m/s, {robot.SAMPLE_RATE} Hz:")
for color in ColorTarget:
    traj = robot.plan_trajectory(robot.Q_HOME, color, table)
    steps = np.array([np.max(np.abs(np.asarray(b[0]) - np.asarray(a[0])))
                      for a, b in zip(traj.waypoints, traj.waypoints[1:])])
    print(f"  {color.value:7s} {len(traj):4d} waypoints  "
          f"{traj.duration:5.2f} s  max joint step {steps.max():.4f} rad")
