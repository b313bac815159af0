"""Per-session puppeteering loop: spawn, execute move commands, mirror.

A session is a single logical actor: spawn/submit/tick are serialized by a
lock. Pose/state events go to registered subscribers; every executed
waypoint is mirrored as an OSC datagram to the real-robot endpoint.

Waypoint timestamps on the wire are seconds since the session was spawned
(monotonic across consecutive commands, so the sim robot's staleness check
never drops a fresh trajectory).
"""

from __future__ import annotations

import enum
import logging
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import osc, robot
from .pipeline import ColorTarget, Mode, MoveCommand

log = logging.getLogger(__name__)


class State(enum.Enum):
    UNSPAWNED = "unspawned"
    READY = "ready"
    EXECUTING = "executing"


class BusyError(RuntimeError):
    pass


class CommandRejected(RuntimeError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class MirrorConfig:
    dest: tuple[str, int] = ("127.0.0.1", 9000)
    tick_ms: int = 10

    def __post_init__(self):
        if self.tick_ms <= 0:
            raise ValueError("tick must be > 0")


class PuppeteerSession:
    def __init__(self, session_id: str,
                 mirror: MirrorConfig = None,
                 params: robot.KinematicParams = None,
                 target_table: dict = None,
                 home_q: np.ndarray = None,
                 tutorial_mode: bool = False,
                 clock=time.monotonic):
        self.session_id = session_id
        self.mirror = mirror or MirrorConfig()
        self.params = params or robot.KinematicParams()
        self.target_table = target_table if target_table is not None else robot.default_target_table()
        self.home_q = np.asarray(home_q if home_q is not None else robot.Q_HOME, dtype=float)
        self.tutorial_mode = tutorial_mode
        self.clock = clock

        self.mode = Mode.IDLE
        self.state = State.UNSPAWNED
        self.q = self.home_q.copy()
        self.base_pose = np.zeros(3)
        self.ee = robot.forward_kinematics(self.q, self.params, check=False)

        self._trajectory: robot.Trajectory | None = None
        self._progress = 0
        self._exec_started_at = 0.0   # session clock when execution began
        self._spawned_at = 0.0
        self._active_color: ColorTarget | None = None
        self._sender = osc.OscSender(self.mirror.dest)
        self._subscribers: list = []
        self._lock = threading.RLock()

    # -- events -----------------------------------------------------------

    def subscribe(self, callback):
        """Register a callback(dict); never blocks the session on emit."""
        self._subscribers.append(callback)

    def _emit(self, event: dict):
        for cb in list(self._subscribers):
            try:
                cb(event)
            except Exception:
                log.exception("event subscriber raised")

    def _emit_state(self):
        self._emit({"type": "state", "value": self.state.value,
                    "session": self.session_id})

    def _emit_pose(self, t: float):
        self._emit({"type": "pose",
                    "q": [float(v) for v in self.q],
                    "ee": [float(v) for v in self.ee.position],
                    "t": t,
                    "session": self.session_id})

    # -- operations -------------------------------------------------------

    def spawn(self, base_pose) -> State:
        """Place the virtual robot at base_pose in the home configuration."""
        with self._lock:
            if self.state is State.EXECUTING:
                raise BusyError("cannot spawn while executing")
            self.base_pose = np.asarray(base_pose, dtype=float)
            self.q = self.home_q.copy()
            self.ee = robot.forward_kinematics(self.q, self.params, check=False)
            self.state = State.READY
            self.mode = Mode.PUPPETEER
            self._spawned_at = self.clock()
            try:
                self._sender.send(osc.OscMessage(
                    osc.ADDR_SPAWN, tuple(float(v) for v in self.base_pose)))
            except OSError:
                log.warning("spawn mirror datagram failed", exc_info=True)
            self._emit_state()
            self._emit_pose(0.0)
            return self.state

    def submit(self, cmd: MoveCommand):
        """Plan a trajectory to the command's color and start executing.

        Raises CommandRejected with a reason code on any refusal.
        """
        with self._lock:
            if self.state is State.UNSPAWNED:
                raise CommandRejected("not-spawned")
            if self.state is State.EXECUTING:
                raise CommandRejected("busy")
            if cmd.target.tutorial_only and not self.tutorial_mode:
                raise CommandRejected("tutorial-only")
            try:
                trajectory = robot.plan_trajectory(
                    self.q, cmd.target, self.target_table, self.params)
            except (robot.PathInfeasible, KeyError) as exc:
                raise CommandRejected("infeasible") from exc
            self._trajectory = trajectory
            self._progress = 0
            self._active_color = cmd.target
            self._exec_started_at = self.clock() - self._spawned_at
            self.state = State.EXECUTING
            self._emit_state()
            return trajectory

    def tick(self, now: float = None) -> int:
        """Advance execution to the waypoints due by `now`.

        Sends one waypoint OSC message per newly passed waypoint (catch-up
        included, none skipped). Returns how many waypoints were emitted.
        """
        with self._lock:
            if self.state is not State.EXECUTING:
                return 0
            now = self.clock() if now is None else now
            elapsed = (now - self._spawned_at) - self._exec_started_at
            wps = self._trajectory.waypoints
            emitted = 0
            while self._progress < len(wps) and wps[self._progress][1] <= elapsed:
                q, t_wp = wps[self._progress]
                self.q = np.asarray(q, dtype=float)
                stamp = self._exec_started_at + t_wp
                args = tuple(float(v) for v in self.q) + (float(stamp),)
                try:
                    self._sender.send(osc.OscMessage(osc.ADDR_WAYPOINT, args))
                except OSError:
                    log.warning("waypoint mirror datagram failed", exc_info=True)
                self._progress += 1
                emitted += 1
            if emitted:
                self.ee = robot.forward_kinematics(self.q, self.params, check=False)
                self._emit_pose(elapsed)
            if self._progress >= len(wps):
                self.state = State.READY
                self._trajectory = None
                self._active_color = None
                self._emit_state()
            return emitted

    @property
    def executing(self) -> bool:
        return self.state is State.EXECUTING

    @property
    def trajectory(self) -> robot.Trajectory | None:
        return self._trajectory

    @property
    def active_color(self) -> ColorTarget | None:
        return self._active_color

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "session": self.session_id,
                "state": self.state.value,
                "mode": self.mode.value,
                "q": [float(v) for v in self.q],
                "ee": [float(v) for v in self.ee.position],
                "base": [float(v) for v in self.base_pose],
                "target": self._active_color.value if self._active_color else None,
            }

    def close(self):
        self._sender.close()
