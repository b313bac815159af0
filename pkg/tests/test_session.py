import numpy as np
import pytest

from puppeteer import osc, robot
from puppeteer.pipeline import ColorTarget, Mode, MoveCommand
from puppeteer.session import (BusyError, CommandRejected, MirrorConfig,
                               PuppeteerSession, State)


class FakeClock:
    def __init__(self):
        self.t = 100.0

    def __call__(self):
        return self.t

    def advance(self, dt):
        self.t += dt


@pytest.fixture
def loopback():
    """Session wired to a loopback OSC listener collecting datagrams."""
    received = []
    listener = osc.OscListener(0, received.append).start()
    clock = FakeClock()
    sess = PuppeteerSession(
        "s1", mirror=MirrorConfig(("127.0.0.1", listener.port)), clock=clock)
    yield sess, received, clock, listener
    sess.close()
    listener.stop()


def drain(listener, received, expected, timeout=3.0):
    import time
    deadline = time.monotonic() + timeout
    while len(received) < expected and time.monotonic() < deadline:
        time.sleep(0.005)
    return received


def test_spawn_sets_ready_home(loopback):
    sess, received, clock, listener = loopback
    assert sess.state is State.UNSPAWNED
    assert sess.mode is Mode.IDLE
    sess.spawn([0.0, 0.0, 0.0])
    assert sess.state is State.READY
    assert sess.mode is Mode.PUPPETEER
    np.testing.assert_allclose(sess.q, robot.Q_HOME)
    np.testing.assert_allclose(
        sess.ee.position, robot.forward_kinematics(robot.Q_HOME).position)
    msgs = drain(listener, received, 1)
    assert msgs[0].address == osc.ADDR_SPAWN
    assert len(msgs[0].args) == 3


def test_submit_before_spawn_rejected(loopback):
    sess, *_ = loopback
    with pytest.raises(CommandRejected) as exc:
        sess.submit(MoveCommand(ColorTarget.RED, "quick"))
    assert exc.value.reason == "not-spawned"


def test_black_requires_tutorial_mode(loopback):
    sess, *_ = loopback
    sess.spawn([0, 0, 0])
    with pytest.raises(CommandRejected) as exc:
        sess.submit(MoveCommand(ColorTarget.BLACK, "quick"))
    assert exc.value.reason == "tutorial-only"


def test_black_allowed_in_tutorial_mode():
    sess = PuppeteerSession("t", tutorial_mode=True, clock=FakeClock())
    sess.spawn([0, 0, 0])
    sess.submit(MoveCommand(ColorTarget.BLACK, "quick"))
    assert sess.state is State.EXECUTING
    sess.close()


def test_submit_while_executing_rejected(loopback):
    sess, *_ = loopback
    sess.spawn([0, 0, 0])
    sess.submit(MoveCommand(ColorTarget.ORANGE, "quick"))
    with pytest.raises(CommandRejected) as exc:
        sess.submit(MoveCommand(ColorTarget.RED, "quick"))
    assert exc.value.reason == "busy"


def test_spawn_while_executing_busy(loopback):
    sess, *_ = loopback
    sess.spawn([0, 0, 0])
    sess.submit(MoveCommand(ColorTarget.ORANGE, "quick"))
    with pytest.raises(BusyError):
        sess.spawn([1, 0, 0])


def test_respawn_resets_to_home(loopback):
    sess, *_ = loopback
    sess.spawn([0, 0, 0])
    sess.submit(MoveCommand(ColorTarget.ORANGE, "quick"))
    clock = sess.clock
    clock.advance(60)
    sess.tick()
    assert sess.state is State.READY
    sess.spawn([0.5, 0.5, 0.0])
    np.testing.assert_allclose(sess.q, robot.Q_HOME)
    np.testing.assert_allclose(sess.base_pose, [0.5, 0.5, 0.0])


def test_tick_when_ready_is_noop(loopback):
    sess, received, clock, listener = loopback
    sess.spawn([0, 0, 0])
    assert sess.tick() == 0


def test_full_execution_mirrors_every_waypoint(loopback):
    sess, received, clock, listener = loopback
    sess.spawn([0, 0, 0])
    traj = sess.submit(MoveCommand(ColorTarget.ORANGE, "quick"))
    n = len(traj)
    # tick in 10 ms steps; every waypoint is emitted exactly once, in order
    while sess.executing:
        clock.advance(0.010)
        sess.tick()
    msgs = [m for m in drain(listener, received, n + 1)
            if m.address == osc.ADDR_WAYPOINT]
    assert len(msgs) == n
    stamps = [m.args[7] for m in msgs]
    assert stamps == sorted(stamps)
    final_q = np.array(msgs[-1].args[:7])
    np.testing.assert_allclose(final_q, traj.waypoints[-1][0], atol=1e-6)
    assert sess.state is State.READY


def test_stall_catch_up_never_skips(loopback):
    sess, received, clock, listener = loopback
    sess.spawn([0, 0, 0])
    traj = sess.submit(MoveCommand(ColorTarget.BLUE, "quick"))
    clock.advance(0.010)
    assert sess.tick() >= 1
    clock.advance(0.025)  # stall: 2-3 waypoints fall due
    emitted = sess.tick()
    assert 2 <= emitted <= 3
    clock.advance(1000)
    sess.tick()
    total = len([m for m in drain(listener, received, len(traj) + 1)
                 if m.address == osc.ADDR_WAYPOINT])
    assert total == len(traj)


def test_completion_reaches_target(loopback):
    sess, received, clock, listener = loopback
    sess.spawn([0, 0, 0])
    sess.submit(MoveCommand(ColorTarget.PURPLE, "quick"))
    clock.advance(1000)
    sess.tick()
    table = robot.default_target_table()
    assert np.linalg.norm(sess.ee.position - table[ColorTarget.PURPLE]) < 1e-3


def test_progress_monotone_and_events(loopback):
    sess, received, clock, listener = loopback
    events = []
    sess.subscribe(events.append)
    sess.spawn([0, 0, 0])
    sess.submit(MoveCommand(ColorTarget.YELLOW, "quick"))
    poses = 0
    while sess.executing:
        clock.advance(0.010)
        sess.tick()
        poses += 1
    kinds = [e["type"] for e in events]
    assert kinds.count("state") == 3  # ready (spawn), executing, ready (done)
    assert any(e["type"] == "pose" for e in events)
    values = [e["value"] for e in events if e["type"] == "state"]
    assert values == ["ready", "executing", "ready"]
