"""Bit-exact OSC 1.0 message codec and UDP transport.

Only the subset the pipeline needs: int32 (tag 'i'), float32 (tag 'f') and
string (tag 's') arguments, one message per UDP datagram. Addresses used
on the wire:

    /puppeteer/move      one string: the target color
    /puppeteer/waypoint  eight float32: seven joint angles + timestamp (s)
    /puppeteer/spawn     three float32: base position (m)
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

MAX_DATAGRAM = 1472  # conservative single-MTU payload

ADDR_MOVE = "/puppeteer/move"
ADDR_WAYPOINT = "/puppeteer/waypoint"
ADDR_SPAWN = "/puppeteer/spawn"


class OscEncodeError(ValueError):
    pass


class OscDecodeError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True)
class OscMessage:
    address: str
    args: tuple = field(default_factory=tuple)

    def __init__(self, address: str, args=()):
        object.__setattr__(self, "address", address)
        object.__setattr__(self, "args", tuple(args))


def _padded_string(s: str, what: str) -> bytes:
    try:
        raw = s.encode("ascii" if what == "address" else "utf-8")
    except UnicodeEncodeError:
        raise OscEncodeError(f"{what} contains non-encodable characters: {s!r}")
    if b"\x00" in raw:
        raise OscEncodeError(f"{what} contains NUL: {s!r}")
    raw += b"\x00"
    return raw + b"\x00" * (-len(raw) % 4)


def encode(msg: OscMessage) -> bytes:
    """Encode per OSC 1.0: padded address, ','+tags padded, big-endian args."""
    if not msg.address or not msg.address.startswith("/"):
        raise OscEncodeError(f"address must start with '/': {msg.address!r}")
    if any(ord(c) >= 0x80 for c in msg.address):
        raise OscEncodeError(f"address must be ASCII: {msg.address!r}")
    out = bytearray(_padded_string(msg.address, "address"))

    tags = ","
    payload = bytearray()
    for i, arg in enumerate(msg.args):
        if isinstance(arg, bool):
            raise OscEncodeError(f"arg {i}: bool is not an OSC type")
        if isinstance(arg, int):
            if not -(2**31) <= arg < 2**31:
                raise OscEncodeError(f"arg {i}: int32 out of range: {arg}")
            tags += "i"
            payload += struct.pack(">i", arg)
        elif isinstance(arg, float):
            tags += "f"
            payload += struct.pack(">f", arg)
        elif isinstance(arg, str):
            tags += "s"
            payload += _padded_string(arg, f"arg {i}")
        else:
            raise OscEncodeError(f"arg {i}: unsupported type {type(arg).__name__}")

    out += _padded_string(tags, "type tags")[:]
    out += payload
    return bytes(out)


def _read_padded_string(data: bytes, offset: int) -> tuple[str, int]:
    end = data.find(b"\x00", offset)
    if end < 0:
        raise OscDecodeError("missing NUL terminator", offset)
    raw = data[offset:end]
    next_off = end + 1
    next_off += -(next_off - offset) % 4
    if next_off > len(data):
        raise OscDecodeError("truncated string padding", end)
    if any(b != 0 for b in data[end:next_off]):
        raise OscDecodeError("non-NUL padding byte", end)
    try:
        return raw.decode("utf-8"), next_off
    except UnicodeDecodeError:
        raise OscDecodeError("invalid UTF-8 in string", offset)


def decode(data: bytes) -> OscMessage:
    """Inverse of encode. Rejects unknown tags and trailing garbage."""
    if len(data) < 8:
        raise OscDecodeError(f"message too short ({len(data)} bytes)", 0)
    if len(data) % 4 != 0:
        raise OscDecodeError(f"length {len(data)} not a multiple of 4", 0)

    address, off = _read_padded_string(data, 0)
    if not address.startswith("/"):
        raise OscDecodeError(f"address must start with '/': {address!r}", 0)
    if any(ord(c) >= 0x80 for c in address):
        raise OscDecodeError("address must be ASCII", 0)

    tags_off = off
    tags, off = _read_padded_string(data, off)
    if not tags.startswith(","):
        raise OscDecodeError("type tag string must start with ','", tags_off)

    args = []
    for i, tag in enumerate(tags[1:]):
        if tag == "i":
            if off + 4 > len(data):
                raise OscDecodeError("truncated int32 argument", off)
            args.append(struct.unpack_from(">i", data, off)[0])
            off += 4
        elif tag == "f":
            if off + 4 > len(data):
                raise OscDecodeError("truncated float32 argument", off)
            args.append(struct.unpack_from(">f", data, off)[0])
            off += 4
        elif tag == "s":
            s, off = _read_padded_string(data, off)
            if "\x00" in s:
                raise OscDecodeError("NUL inside string argument", off)
            args.append(s)
        else:
            raise OscDecodeError(f"unknown type tag {tag!r}", tags_off + 1 + i)
    if off != len(data):
        raise OscDecodeError(f"{len(data) - off} trailing bytes", off)
    return OscMessage(address, args)


class OscSender:
    """Datagram sender; safe from concurrent callers."""

    def __init__(self, dest: tuple[str, int], mtu: int = MAX_DATAGRAM):
        self.dest = dest
        self.mtu = mtu
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send(self, msg: OscMessage):
        data = encode(msg)
        if len(data) > self.mtu:
            raise OscEncodeError(f"datagram too large: {len(data)} > {self.mtu}")
        self._sock.sendto(data, self.dest)

    def close(self):
        self._sock.close()


def send(msg: OscMessage, dest: tuple[str, int]):
    """One-shot convenience wrapper around OscSender."""
    sender = OscSender(dest)
    try:
        sender.send(msg)
    finally:
        sender.close()


class OscListener:
    """Receive loop invoking a handler per well-formed datagram.

    Malformed datagrams are logged and dropped; they never kill the loop.
    """

    def __init__(self, port: int, handler, host: str = "127.0.0.1"):
        self.handler = handler
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._sock.settimeout(0.2)
        self._running = False
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def _loop(self):
        while self._running:
            try:
                data, _ = self._sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                msg = decode(data)
            except OscDecodeError as exc:
                log.debug("dropped malformed datagram: %s", exc)
                continue
            try:
                self.handler(msg)
            except Exception:
                log.exception("osc handler raised; message dropped")

    def start(self) -> "OscListener":
        self._running = True
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._running = False
        if self._thread:
            self._thread.join(timeout=2)
        self._sock.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
