"""Client/server link between the haptic servo loop and the scene session.

Wire format: 4-byte big-endian length prefix followed by a UTF-8 JSON body
{"kind": ..., "seq": ..., "payload": {...}}. The server side is polled from
the servo context and never blocks; the client side is a synchronous
request/response used only by the slow session loop. One client at a time.

Message kinds:
  GET_POSE        -> POSE   payload: StylusState
  SET_FORCE_MODEL -> ACK    payload: ConstraintModel fields
  PING            -> PONG
Responses echo the request seq.
"""

from __future__ import annotations

import json
import os
import socket
import struct
import time
from dataclasses import dataclass, field

DEFAULT_PORT = 7450
PORT_ENV_VAR = "VWC_HAPTIC_PORT"

_HEADER = struct.Struct(">I")
_MAX_FRAME = 1 << 20

KINDS = {"GET_POSE", "POSE", "SET_FORCE_MODEL", "ACK", "PING", "PONG"}


class ProtocolError(Exception):
    pass


class ProtocolTimeout(ProtocolError):
    pass


class ProtocolViolation(ProtocolError):
    pass


def default_port() -> int:
    return int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))


@dataclass
class Message:
    kind: str
    seq: int
    payload: dict = field(default_factory=dict)

    def encode(self) -> bytes:
        body = json.dumps(
            {"kind": self.kind, "seq": self.seq, "payload": self.payload},
            separators=(",", ":"),
        ).encode("utf-8")
        return _HEADER.pack(len(body)) + body

    @staticmethod
    def decode_body(body: bytes) -> "Message":
        try:
            obj = json.loads(body.decode("utf-8"))
            kind = obj["kind"]
            seq = int(obj["seq"])
            payload = obj.get("payload", {})
        except (ValueError, KeyError, UnicodeDecodeError) as exc:
            raise ProtocolViolation(f"protocol violation: bad frame ({exc})") from exc
        if kind not in KINDS or not isinstance(payload, dict):
            raise ProtocolViolation(f"protocol violation: unknown kind {kind!r}")
        return Message(kind, seq, payload)


class _FrameBuffer:
    """Accumulates bytes; yields complete frames, retains partial ones."""

    def __init__(self):
        self.buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self.buf.extend(data)
        out = []
        while len(self.buf) >= _HEADER.size:
            (length,) = _HEADER.unpack_from(self.buf)
            if length > _MAX_FRAME:
                raise ProtocolViolation(f"protocol violation: frame of {length} bytes")
            if len(self.buf) < _HEADER.size + length:
                break
            body = bytes(self.buf[_HEADER.size : _HEADER.size + length])
            del self.buf[: _HEADER.size + length]
            out.append(Message.decode_body(body))
        return out


class HapticServer:
    """Non-blocking server polled from the servo context.

    get_state() supplies the latest stylus snapshot dict, set_model(payload)
    stages a force model for the next tick, on_disconnect() resets the model
    to inactive (fail-safe zero force).
    """

    def __init__(self, get_state, set_model, on_disconnect=None, host="127.0.0.1", port=None):
        self.get_state = get_state
        self.set_model = set_model
        self.on_disconnect = on_disconnect
        self.listener = socket.create_server((host, port if port is not None else default_port()))
        self.listener.setblocking(False)
        self.port = self.listener.getsockname()[1]
        self.conn: socket.socket | None = None
        self.inbox = _FrameBuffer()
        self.outbox = bytearray()

    def serve_step(self) -> None:
        """Drain pending frames and flush replies; never blocks."""
        if self.conn is None:
            try:
                conn, _ = self.listener.accept()
            except BlockingIOError:
                return
            conn.setblocking(False)
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self.conn = conn
            self.inbox = _FrameBuffer()
            self.outbox = bytearray()
        try:
            while True:
                data = self.conn.recv(65536)
                if data == b"":
                    self._drop_client()
                    return
                for msg in self.inbox.feed(data):
                    self.outbox.extend(self._handle(msg).encode())
        except BlockingIOError:
            pass
        except (ProtocolViolation, ConnectionError, OSError):
            self._drop_client()
            return
        self._flush()

    def _handle(self, msg: Message) -> Message:
        if msg.kind == "GET_POSE":
            return Message("POSE", msg.seq, self.get_state() or {})
        if msg.kind == "SET_FORCE_MODEL":
            self.set_model(msg.payload)
            return Message("ACK", msg.seq)
        if msg.kind == "PING":
            return Message("PONG", msg.seq)
        raise ProtocolViolation(f"protocol violation: unexpected request {msg.kind}")

    def _flush(self) -> None:
        if not self.outbox or self.conn is None:
            return
        try:
            sent = self.conn.send(bytes(self.outbox))
            del self.outbox[:sent]
        except BlockingIOError:
            pass
        except (ConnectionError, OSError):
            self._drop_client()

    def _drop_client(self) -> None:
        if self.conn is not None:
            try:
                self.conn.close()
            finally:
                self.conn = None
        if self.on_disconnect is not None:
            self.on_disconnect()

    def close(self) -> None:
        if self.conn is not None:
            self.conn.close()
            self.conn = None
        self.listener.close()


class HapticClient:
    """Synchronous request/response endpoint used by the session loop."""

    def __init__(self, host="127.0.0.1", port=None, connect_timeout_s: float = 5.0):
        port = port if port is not None else default_port()
        self.sock = socket.create_connection((host, port), timeout=connect_timeout_s)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.inbox = _FrameBuffer()
        self._seq = 0

    def request(
        self, kind: str, payload: dict | None = None, timeout_ms: float = 1000.0, pump=None
    ) -> Message:
        """Send a request and wait for its reply.

        `pump`, when given, is invoked while waiting so a same-process server
        can make progress (lockstep mode); the wait then polls with a short
        socket timeout instead of blocking for the full budget.
        """
        self._seq += 1
        msg = Message(kind, self._seq, payload or {})
        deadline = time.monotonic() + timeout_ms / 1000.0
        self.sock.settimeout(0.002 if pump is not None else timeout_ms / 1000.0)
        try:
            self.sock.sendall(msg.encode())
            if pump is not None:
                pump()
            reply = None
            while reply is None:
                try:
                    data = self.sock.recv(65536)
                except socket.timeout:
                    if pump is None or time.monotonic() > deadline:
                        raise
                    pump()
                    continue
                if data == b"":
                    raise ProtocolError("server closed connection")
                frames = self.inbox.feed(data)
                if frames:
                    reply = frames[0]
        except socket.timeout as exc:
            raise ProtocolTimeout("server unresponsive") from exc
        if reply.seq != msg.seq:
            raise ProtocolViolation(
                f"protocol violation: reply seq {reply.seq} != request seq {msg.seq}"
            )
        return reply

    def get_pose(self, timeout_ms: float = 1000.0, pump=None) -> dict:
        return self.request("GET_POSE", timeout_ms=timeout_ms, pump=pump).payload

    def set_force_model(self, model_payload: dict, timeout_ms: float = 1000.0, pump=None) -> None:
        self.request("SET_FORCE_MODEL", model_payload, timeout_ms=timeout_ms, pump=pump)

    def ping(self, timeout_ms: float = 1000.0, pump=None) -> None:
        self.request("PING", timeout_ms=timeout_ms, pump=pump)

    def close(self) -> None:
        self.sock.close()
