"""Round-robin client over N local completion endpoints, plus a stub server.

Wire contract (fixed, implemented by the stub and expected from any real
server): POST <base_url><path> with body {"prompt": str, "n_predict": 128,
"temperature": 0}; response body {"content": str}. Both UTF-8 JSON.

Health policy: an endpoint goes unhealthy after 3 consecutive failures and
receives no traffic until a probe interval (default 30 s) elapses, after
which it gets exactly one probe request.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import httpx

UNHEALTHY_AFTER = 3
PROBE_INTERVAL_S = 30.0


class LlmUnavailable(Exception):
    pass


class PoolExhausted(LlmUnavailable):
    pass


@dataclass
class LlmEndpoint:
    base_url: str
    path: str = "/completion"
    consecutive_failures: int = 0
    last_failure_at: float = 0.0
    request_count: int = 0

    @property
    def healthy(self) -> bool:
        return self.consecutive_failures < UNHEALTHY_AFTER

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + self.path


class LlmPool:
    """Shared pool; cursor advancement and failure counting are atomic."""

    def __init__(self, endpoints: list[LlmEndpoint], probe_interval_s: float = PROBE_INTERVAL_S):
        if not endpoints:
            raise ValueError("pool needs at least one endpoint")
        self.endpoints = endpoints
        self.probe_interval_s = probe_interval_s
        self._cursor = 0
        self._lock = threading.Lock()
        self._client = httpx.Client()

    def _probe_due(self, ep: LlmEndpoint, now: float) -> bool:
        return now - ep.last_failure_at >= self.probe_interval_s

    def next_instance(self) -> LlmEndpoint:
        """Round-robin pick, skipping unhealthy endpoints (no turn consumed).

        An unhealthy endpoint whose probe interval has elapsed is eligible
        again for a single probe.
        """
        now = time.monotonic()
        with self._lock:
            n = len(self.endpoints)
            for _ in range(n):
                ep = self.endpoints[self._cursor]
                self._cursor = (self._cursor + 1) % n
                if ep.healthy or self._probe_due(ep, now):
                    ep.request_count += 1
                    return ep
            raise PoolExhausted("no healthy llm endpoint")

    def _mark_failure(self, ep: LlmEndpoint):
        with self._lock:
            ep.consecutive_failures += 1
            ep.last_failure_at = time.monotonic()

    def _mark_success(self, ep: LlmEndpoint):
        with self._lock:
            ep.consecutive_failures = 0

    def complete(self, prompt: str, timeout_ms: int = 3000) -> str:
        """Send the prompt; on failure retry once on the next endpoint."""
        if not prompt:
            raise ValueError("empty prompt")
        body = {"prompt": prompt, "n_predict": 128, "temperature": 0}
        last_exc: Exception | None = None
        for _attempt in range(2):
            try:
                ep = self.next_instance()
            except PoolExhausted as exc:
                last_exc = exc
                break
            try:
                resp = self._client.post(ep.url, json=body, timeout=timeout_ms / 1000.0)
                resp.raise_for_status()
                reply = resp.json()["content"]
            except Exception as exc:  # timeout, transport, bad status, bad body
                self._mark_failure(ep)
                last_exc = exc
                continue
            self._mark_success(ep)
            return reply
        raise LlmUnavailable(f"all completion attempts failed: {last_exc}")

    def close(self):
        self._client.close()


@dataclass
class Delay:
    """Stub script entry: sleep this long before answering."""

    seconds: float
    reply: str = '{"command":"uncertain"}'


class StubLlmServer:
    """In-process completion server answering from a cyclic script.

    Every request body is recorded in `request_log` for call-count
    assertions in tests.
    """

    def __init__(self, script: list, host: str = "127.0.0.1", port: int = 0):
        if not script:
            raise ValueError("script must be non-empty")
        self.script = list(script)
        self.request_log: list[dict] = []
        self._idx = 0
        self._lock = threading.Lock()

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    body = json.loads(raw)
                except ValueError:
                    body = {"_raw": raw.decode("utf-8", "replace")}
                with stub._lock:
                    stub.request_log.append(body)
                    entry = stub.script[stub._idx % len(stub.script)]
                    stub._idx += 1
                if isinstance(entry, Delay):
                    time.sleep(entry.seconds)
                    reply = entry.reply
                elif callable(entry):
                    reply = entry(body)
                else:
                    reply = entry
                payload = json.dumps({"content": reply}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubLlmServer":
        self._thread.start()
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
