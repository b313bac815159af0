"""Composition root: transcript ingest -> gate -> pipeline -> session -> OSC.

Surfaces:
  - TCP ingest (newline-delimited JSON {"session": str, "text": str})
  - HTTP: GET /health, GET /state, GET /events/recent,
          POST /spawn {"base":[x,y,z]}, POST /command {"text": str}
  - WebSocket /events streaming session event JSON
  - OSC/UDP out to the mirror destination (see osc module)

Run it:  python -m puppeteer.gateway --config cfg.json --stub-llm
"""

from __future__ import annotations

import argparse
import asyncio
import collections
import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import uvicorn
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import robot
from .llm_pool import LlmEndpoint, LlmPool, StubLlmServer
from .pipeline import (ColorTarget, Invalid, Mode, PipelinePolicy, Uncertain,
                       Valid, validate)
from .session import (BusyError, CommandRejected, MirrorConfig,
                      PuppeteerSession, State)
from .transcript_gate import (GatedCommandText, NoWakeword, Transcript,
                              WakewordConfig, gate)

log = logging.getLogger(__name__)

QUEUE_DEPTH = 8
EVENT_RING = 1024


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.field_path = path


@dataclass
class GatewayConfig:
    wakeword: WakewordConfig = field(default_factory=WakewordConfig)
    pipeline: PipelinePolicy = field(default_factory=PipelinePolicy)
    endpoints: list = field(default_factory=lambda: [
        LlmEndpoint("http://localhost:8080"),
        LlmEndpoint("http://localhost:8081"),
    ])
    osc_dest: tuple = ("127.0.0.1", 9000)
    osc_mtu: int = 1472
    mirror_tick_ms: int = 10
    params: robot.KinematicParams = field(default_factory=robot.KinematicParams)
    home_q: np.ndarray = field(default_factory=lambda: robot.Q_HOME.copy())
    targets: dict = field(default_factory=robot.default_target_table)
    tutorial_mode: bool = False
    http_host: str = "127.0.0.1"
    http_port: int = 8800
    ingest_host: str = "127.0.0.1"
    ingest_port: int = 8801
    stub_llm: bool = False


def _parse_hostport(value: str, path: str) -> tuple[str, int]:
    m = re.fullmatch(r"(.+):(\d+)", value)
    if not m:
        raise ConfigError(path, f"expected HOST:PORT, got {value!r}")
    return m.group(1), int(m.group(2))


def load_config(path_or_dict) -> GatewayConfig:
    """Parse the JSON config file, fill defaults, validate invariants."""
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        with open(path_or_dict, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except ValueError as exc:
                raise ConfigError("<root>", f"invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")

    cfg = GatewayConfig()

    ww = raw.get("wakeword", {})
    try:
        cfg.wakeword = WakewordConfig(
            wakeword=ww.get("word", "blueberry"),
            sensitivity=ww.get("sensitivity", 0.9))
    except ValueError as exc:
        raise ConfigError("wakeword", str(exc))
    if not 0.0 <= cfg.wakeword.sensitivity <= 1.0:
        raise ConfigError("wakeword.sensitivity", "out of [0,1]")

    pl = raw.get("pipeline", {})
    try:
        cfg.pipeline = PipelinePolicy(
            max_revalidations=pl.get("max_revalidations", 1),
            llm_timeout_ms=pl.get("llm_timeout_ms", 3000),
            uncertain_after_exhaustion=pl.get("uncertain_policy", "discard"))
    except ValueError as exc:
        raise ConfigError("pipeline", str(exc))

    llm = raw.get("llm", {})
    if "endpoints" in llm:
        eps = []
        for i, ep in enumerate(llm["endpoints"]):
            if "base_url" not in ep:
                raise ConfigError(f"llm.endpoints[{i}].base_url", "required")
            eps.append(LlmEndpoint(ep["base_url"], ep.get("path", "/completion")))
        cfg.endpoints = eps

    cfg.stub_llm = bool(raw.get("stub_llm", False))
    if not cfg.endpoints and not cfg.stub_llm:
        raise ConfigError("llm.endpoints", "at least one endpoint unless stub mode")

    o = raw.get("osc", {})
    if "dest" in o:
        cfg.osc_dest = _parse_hostport(o["dest"], "osc.dest")
    cfg.osc_mtu = o.get("mtu", 1472)
    cfg.mirror_tick_ms = o.get("tick_ms", 10)
    if cfg.mirror_tick_ms <= 0:
        raise ConfigError("osc.tick_ms", "must be > 0")

    rb = raw.get("robot", {})
    if "params_path" in rb:
        with open(rb["params_path"], encoding="utf-8") as fh:
            pd = json.load(fh)
        cfg.params = robot.KinematicParams(
            dh=np.asarray(pd["dh"], dtype=float),
            flange=tuple(pd.get("flange", robot.PANDA_FLANGE)),
            limits=np.asarray(pd.get("limits", robot.PANDA_LIMITS), dtype=float))
        if cfg.params.dh.shape != (7, 3):
            raise ConfigError("robot.params_path", "dh table must be 7x3")
    if "home_q" in rb:
        home = np.asarray(rb["home_q"], dtype=float)
        if home.shape != (7,):
            raise ConfigError("robot.home_q", "expected 7 joint angles")
        cfg.home_q = home
    if "targets" in rb:
        table = {}
        for name, pos in rb["targets"].items():
            try:
                color = ColorTarget(name)
            except ValueError:
                raise ConfigError(f"robot.targets.{name}", "unknown color")
            if len(pos) != 3:
                raise ConfigError(f"robot.targets.{name}", "expected [x,y,z]")
            table[color] = np.asarray(pos, dtype=float)
        cfg.targets = table

    cfg.tutorial_mode = bool(raw.get("tutorial_mode", False))

    listen = raw.get("listen", {})
    if "http" in listen:
        cfg.http_host, cfg.http_port = _parse_hostport(listen["http"], "listen.http")
    if "ingest" in listen:
        cfg.ingest_host, cfg.ingest_port = _parse_hostport(listen["ingest"], "listen.ingest")
    ports = [p for p in (cfg.http_port, cfg.ingest_port) if p != 0]
    if len(ports) != len(set(ports)):
        raise ConfigError("listen", "http and ingest ports must be distinct")

    return cfg


def stub_classifier(body: dict) -> str:
    """Deterministic stand-in for a real model behind --stub-llm.

    Scans the delimited instruction block for a color word next to a
    movement verb; answers the same three-way JSON schema a real model is
    prompted for.
    """
    prompt = body.get("prompt", "")
    m = re.search(r"<<<BEGIN\n(.*)\nEND>>>", prompt, re.S)
    text = (m.group(1) if m else prompt).lower()
    colors = [c.value for c in ColorTarget if c.value in text]
    movish = any(w in text for w in ("move", "go", "navigate", "head",
                                     "relocate", "shift", "toward", "to the"))
    if len(colors) == 1 and movish:
        return '{"command":"move","color":"%s"}' % colors[0]
    if not colors:
        return '{"command":"none"}'
    return '{"command":"uncertain"}'


class Gateway:
    """Owns sessions, the LLM pool, the event stream and all listeners."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self._stub_servers: list[StubLlmServer] = []
        if config.stub_llm:
            endpoints = []
            for _ in range(max(2, len(config.endpoints) or 2)):
                server = StubLlmServer([stub_classifier]).start()
                self._stub_servers.append(server)
                endpoints.append(LlmEndpoint(server.base_url))
            self.pool = LlmPool(endpoints)
        else:
            self.pool = LlmPool(list(config.endpoints))

        self.sessions: dict[str, PuppeteerSession] = {}
        self._queues: dict[str, asyncio.Queue] = {}
        self._workers: dict[str, asyncio.Task] = {}
        self._tick_tasks: dict[str, asyncio.Task] = {}

        self._events = collections.deque(maxlen=EVENT_RING)
        self._seq = 0
        self._event_lock = threading.Lock()
        self._ws_queues: set[asyncio.Queue] = set()

        self._loop: asyncio.AbstractEventLoop | None = None
        self._ingest_server: asyncio.AbstractServer | None = None
        self._uvicorn: uvicorn.Server | None = None
        self.app = self._build_app()

    # -- events -----------------------------------------------------------

    def publish(self, event: dict):
        """Thread-safe event fan-out to the ring buffer and WS subscribers."""
        with self._event_lock:
            self._seq += 1
            event = dict(event, seq=self._seq, ts=time.time())
            self._events.append(event)
        if self._loop is None:
            return
        def _fanout():
            for q in list(self._ws_queues):
                q.put_nowait(event)
        try:
            running = asyncio.get_running_loop()
        except RuntimeError:
            running = None
        if running is self._loop:
            _fanout()
        else:
            self._loop.call_soon_threadsafe(_fanout)

    def recent_events(self) -> list[dict]:
        with self._event_lock:
            return list(self._events)

    # -- sessions ---------------------------------------------------------

    def session(self, session_id: str) -> PuppeteerSession:
        if session_id not in self.sessions:
            s = PuppeteerSession(
                session_id,
                mirror=MirrorConfig(self.config.osc_dest, self.config.mirror_tick_ms),
                params=self.config.params,
                target_table=self.config.targets,
                home_q=self.config.home_q,
                tutorial_mode=self.config.tutorial_mode)
            s.subscribe(self.publish)
            self.sessions[session_id] = s
        return self.sessions[session_id]

    def _ensure_worker(self, session_id: str):
        if session_id not in self._workers or self._workers[session_id].done():
            self._queues.setdefault(session_id, asyncio.Queue(maxsize=QUEUE_DEPTH))
            self._workers[session_id] = asyncio.ensure_future(
                self._session_worker(session_id))

    def enqueue_transcript(self, session_id: str, text: str):
        """Queue a transcript for the session (bounded, drop-oldest)."""
        self._ensure_worker(session_id)
        q = self._queues[session_id]
        if q.full():
            dropped = q.get_nowait()
            log.warning("session %s queue overflow, dropping %r",
                        session_id, dropped.text)
        q.put_nowait(Transcript(session_id, text, time.monotonic() * 1000))

    async def _session_worker(self, session_id: str):
        q = self._queues[session_id]
        while True:
            transcript = await q.get()
            try:
                await self._process(transcript)
            except Exception:
                log.exception("transcript processing failed")

    async def _process(self, transcript: Transcript):
        sess = self.session(transcript.session_id)

        gated = gate(transcript, self.config.wakeword)
        if isinstance(gated, NoWakeword):
            self.publish({"type": "command", "stage": "gate",
                          "outcome": "no-wakeword",
                          "detail": f"similarity {gated.similarity:.3f}",
                          "session": transcript.session_id,
                          "text": transcript.text})
            return

        if sess.mode is not Mode.PUPPETEER:
            self.publish({"type": "command", "stage": "mode",
                          "outcome": "rejected", "detail": "idle-mode",
                          "session": transcript.session_id,
                          "text": transcript.text})
            return

        outcome = await asyncio.to_thread(
            validate, gated.text, self.config.pipeline, self.pool)

        base = {"type": "command", "session": transcript.session_id,
                "text": transcript.text}
        if isinstance(outcome, Valid):
            stage = outcome.command.origin_stage
            try:
                await asyncio.to_thread(sess.submit, outcome.command)
            except CommandRejected as exc:
                self.publish({**base, "stage": stage, "outcome": "rejected",
                              "detail": exc.reason})
                return
            self.publish({**base, "stage": stage, "outcome": "valid",
                          "detail": outcome.command.to_json()})
            self._start_ticker(transcript.session_id)
        elif isinstance(outcome, Invalid):
            stage = "llm" if any(s == "llm" for s, _ in outcome.provenance) else "quick"
            self.publish({**base, "stage": stage, "outcome": "invalid",
                          "detail": outcome.reason})
        else:
            self.publish({**base, "stage": "llm", "outcome": "uncertain",
                          "detail": f"discarded after {outcome.attempts + 1} llm calls"})

    def _start_ticker(self, session_id: str):
        task = self._tick_tasks.get(session_id)
        if task and not task.done():
            return
        self._tick_tasks[session_id] = asyncio.ensure_future(
            self._tick_loop(session_id))

    async def _tick_loop(self, session_id: str):
        sess = self.sessions[session_id]
        interval = self.config.mirror_tick_ms / 1000.0
        while sess.executing:
            sess.tick()
            await asyncio.sleep(interval)

    # -- HTTP/WS app --------------------------------------------------------

    def _build_app(self) -> FastAPI:
        app = FastAPI(title="puppeteer gateway")
        # the operator console may be served from a different origin
        app.add_middleware(CORSMiddleware, allow_origins=["*"],
                           allow_methods=["*"], allow_headers=["*"])
        gw = self

        @app.get("/health")
        async def health():
            return {"status": "ok"}

        @app.get("/state")
        async def state(session: str = "default"):
            snap = gw.session(session).snapshot()
            snap["robot"] = {
                "dh": gw.config.params.dh.tolist(),
                "flange": list(gw.config.params.flange),
                "limits": gw.config.params.limits.tolist(),
                "home_q": gw.config.home_q.tolist(),
            }
            snap["targets"] = {c.value: [float(v) for v in p]
                               for c, p in gw.config.targets.items()}
            snap["tutorial_mode"] = gw.config.tutorial_mode
            return snap

        @app.post("/spawn")
        async def spawn(body: dict):
            if "base" not in body or len(body["base"]) != 3:
                return JSONResponse({"error": "expected {\"base\":[x,y,z]}"},
                                    status_code=422)
            sess = gw.session(body.get("session", "default"))
            try:
                await asyncio.to_thread(sess.spawn, body["base"])
            except BusyError:
                return JSONResponse({"error": "busy"}, status_code=409)
            return sess.snapshot()

        @app.post("/command")
        async def command(body: dict):
            if "text" not in body or not isinstance(body["text"], str):
                return JSONResponse({"error": "expected {\"text\": str}"},
                                    status_code=422)
            gw.enqueue_transcript(body.get("session", "default"), body["text"])
            return {"queued": True}

        @app.get("/events/recent")
        async def events_recent():
            return gw.recent_events()

        @app.websocket("/events")
        async def events_ws(ws: WebSocket):
            await ws.accept()
            q: asyncio.Queue = asyncio.Queue()
            gw._ws_queues.add(q)

            async def drain_incoming():
                # clients may send anything (text or binary); ignore it all
                while True:
                    message = await ws.receive()
                    if message.get("type") == "websocket.disconnect":
                        return

            async def push_events():
                while True:
                    await ws.send_json(await q.get())

            tasks = {asyncio.ensure_future(drain_incoming()),
                     asyncio.ensure_future(push_events())}
            try:
                done, pending = await asyncio.wait(
                    tasks, return_when=asyncio.FIRST_COMPLETED)
                for task in pending:
                    task.cancel()
                for task in done:
                    task.exception()  # swallow send/receive failures
            except (WebSocketDisconnect, RuntimeError):
                pass
            finally:
                for task in tasks:
                    task.cancel()
                gw._ws_queues.discard(q)

        return app

    # -- TCP ingest ---------------------------------------------------------

    async def _handle_ingest(self, reader: asyncio.StreamReader,
                             writer: asyncio.StreamWriter):
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    session_id = obj["session"]
                    text = obj["text"]
                    if not isinstance(session_id, str) or not isinstance(text, str):
                        raise ValueError("bad field types")
                except (ValueError, KeyError, TypeError):
                    writer.write(b'{"error":"malformed"}\n')
                    await writer.drain()
                    continue
                self.enqueue_transcript(session_id, text)
                writer.write(b'{"ok":true}\n')
                await writer.drain()
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            writer.close()

    # -- lifecycle ----------------------------------------------------------

    async def serve(self, ready: threading.Event = None):
        """Run ingest + HTTP/WS until cancelled."""
        self._loop = asyncio.get_running_loop()
        self._ingest_server = await asyncio.start_server(
            self._handle_ingest, self.config.ingest_host, self.config.ingest_port)

        uv_config = uvicorn.Config(
            self.app, host=self.config.http_host, port=self.config.http_port,
            log_level="warning", ws="auto")
        self._uvicorn = uvicorn.Server(uv_config)

        async def announce():
            while not self._uvicorn.started:
                await asyncio.sleep(0.01)
            if ready:
                ready.set()

        announcer = asyncio.ensure_future(announce())
        try:
            await self._uvicorn.serve()
        finally:
            announcer.cancel()
            self._ingest_server.close()
            await self._ingest_server.wait_closed()
            self.close()

    @property
    def http_port(self) -> int:
        if self._uvicorn and self._uvicorn.servers:
            return self._uvicorn.servers[0].sockets[0].getsockname()[1]
        return self.config.http_port

    @property
    def ingest_port(self) -> int:
        if self._ingest_server:
            return self._ingest_server.sockets[0].getsockname()[1]
        return self.config.ingest_port

    def close(self):
        for sess in self.sessions.values():
            sess.close()
        for server in self._stub_servers:
            server.stop()
        self.pool.close()


class GatewayRunner:
    """Run a Gateway on a background thread (tests, embedding)."""

    def __init__(self, config: GatewayConfig):
        self.gateway = Gateway(config)
        self._ready = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        asyncio.run(self.gateway.serve(ready=self._ready))

    def start(self, timeout: float = 10.0) -> "GatewayRunner":
        self._thread.start()
        if not self._ready.wait(timeout):
            raise RuntimeError("gateway failed to start")
        return self

    @property
    def http_base(self) -> str:
        return f"http://{self.gateway.config.http_host}:{self.gateway.http_port}"

    @property
    def ingest_addr(self) -> tuple[str, int]:
        return (self.gateway.config.ingest_host, self.gateway.ingest_port)

    def stop(self):
        if self.gateway._uvicorn:
            self.gateway._uvicorn.should_exit = True
        self._thread.join(timeout=10)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    parser = argparse.ArgumentParser(description="voice-command robot gateway")
    parser.add_argument("--config", default=None, help="JSON config path")
    parser.add_argument("--stub-llm", action="store_true",
                        help="use an internal deterministic stub LLM pool")
    parser.add_argument("--osc-dest", default=None, help="HOST:PORT")
    parser.add_argument("--http", default=None, help="HOST:PORT")
    parser.add_argument("--ingest", default=None, help="HOST:PORT")
    parser.add_argument("--log-level", default="INFO")
    args = parser.parse_args(argv)

    logging.basicConfig(level=args.log_level.upper())
    config = load_config(args.config) if args.config else GatewayConfig()
    if args.stub_llm:
        config.stub_llm = True
    if args.osc_dest:
        config.osc_dest = _parse_hostport(args.osc_dest, "--osc-dest")
    if args.http:
        config.http_host, config.http_port = _parse_hostport(args.http, "--http")
    if args.ingest:
        config.ingest_host, config.ingest_port = _parse_hostport(args.ingest, "--ingest")

    gw = Gateway(config)
    log.info("gateway: http %s:%d ingest %s:%d osc->%s:%d",
             config.http_host, config.http_port,
             config.ingest_host, config.ingest_port, *config.osc_dest)
    asyncio.run(gw.serve())


if __name__ == "__main__":
    main()
