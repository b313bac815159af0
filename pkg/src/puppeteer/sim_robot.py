"""Stand-in for the physical arm: mirrors waypoints received over OSC/UDP.

Listens for "/puppeteer/waypoint" (7 joint angles + timestamp, float32)
and "/puppeteer/spawn" datagrams, applies them to its own state, and serves
a JSON snapshot over HTTP GET /status for verification.

Runnable as a process:  python -m puppeteer.sim_robot --udp-port 9000 --http-port 9001
"""

from __future__ import annotations

import argparse
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import osc, robot

log = logging.getLogger(__name__)


class SimRobot:
    def __init__(self, udp_port: int = 9000, http_port: int = 9001,
                 host: str = "127.0.0.1"):
        self._lock = threading.Lock()
        self.q = robot.Q_HOME.copy()
        self.last_waypoint_t = -np.inf
        self.received_count = 0
        self.dropped_count = 0
        self.base_pose = np.zeros(3)

        self._listener = osc.OscListener(udp_port, self._handle, host=host)
        self._http = ThreadingHTTPServer((host, http_port), self._make_handler())
        self._http_thread = threading.Thread(
            target=self._http.serve_forever, daemon=True)

    @property
    def udp_port(self) -> int:
        return self._listener.port

    @property
    def http_port(self) -> int:
        return self._http.server_address[1]

    def _handle(self, msg: osc.OscMessage):
        if msg.address == osc.ADDR_WAYPOINT:
            self.apply_waypoint(msg)
        elif msg.address == osc.ADDR_SPAWN:
            self.apply_spawn(msg)
        else:
            log.debug("ignoring message for %s", msg.address)

    def apply_waypoint(self, msg: osc.OscMessage):
        """Apply 7 joints + timestamp; drop wrong arity and stale stamps."""
        args = msg.args
        if len(args) != 8 or not all(isinstance(a, float) for a in args):
            with self._lock:
                self.dropped_count += 1
            log.debug("dropped waypoint with bad args: %r", args)
            return
        t = args[7]
        with self._lock:
            if t < self.last_waypoint_t:
                self.dropped_count += 1
                log.debug("dropped stale waypoint t=%s < %s", t, self.last_waypoint_t)
                return
            self.q = np.array(args[:7], dtype=float)
            self.last_waypoint_t = t
            self.received_count += 1

    def apply_spawn(self, msg: osc.OscMessage):
        args = msg.args
        if len(args) != 3 or not all(isinstance(a, float) for a in args):
            log.debug("dropped spawn with bad args: %r", args)
            return
        with self._lock:
            self.base_pose = np.array(args, dtype=float)
            self.q = robot.Q_HOME.copy()
            self.last_waypoint_t = -np.inf

    def status(self) -> dict:
        with self._lock:
            return {
                "q": [float(v) for v in self.q],
                "last_waypoint_t": None if self.last_waypoint_t == -np.inf
                                   else float(self.last_waypoint_t),
                "received_count": self.received_count,
                "dropped_count": self.dropped_count,
                "base": [float(v) for v in self.base_pose],
            }

    def _make_handler(self):
        sim = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                if self.path in ("/status", "/health"):
                    body = json.dumps(
                        sim.status() if self.path == "/status"
                        else {"status": "ok"}).encode()
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                else:
                    self.send_error(404)

            def log_message(self, *args):
                pass

        return Handler

    def start(self) -> "SimRobot":
        self._listener.start()
        self._http_thread.start()
        return self

    def stop(self):
        self._listener.stop()
        self._http.shutdown()
        self._http.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    parser = argparse.ArgumentParser(description="simulated mirror robot")
    parser.add_argument("--udp-port", type=int, default=9000)
    parser.add_argument("--http-port", type=int, default=9001)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--log-level", default="INFO")
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    sim = SimRobot(args.udp_port, args.http_port, args.host).start()
    log.info("sim robot: udp %d, http %d", sim.udp_port, sim.http_port)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        sim.stop()


if __name__ == "__main__":
    main()
