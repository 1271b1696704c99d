import threading
import time

import numpy as np
import pytest

from vworkcell.device import HoldSource, VirtualStylus
from vworkcell.geometry.pose import Pose
from vworkcell.protocol import (
    DEFAULT_PORT,
    PORT_ENV_VAR,
    HapticClient,
    HapticServer,
    Message,
    ProtocolTimeout,
    ProtocolViolation,
    _FrameBuffer,
    default_port,
)
from vworkcell.servo import ConstraintModel, HapticServo


class TestFraming:
    def test_round_trip(self):
        msg = Message("PING", 3, {"a": 1})
        buf = _FrameBuffer()
        out = buf.feed(msg.encode())
        assert len(out) == 1
        assert out[0].kind == "PING" and out[0].seq == 3 and out[0].payload == {"a": 1}

    def test_partial_then_complete(self):
        data = Message("PING", 1).encode()
        buf = _FrameBuffer()
        assert buf.feed(data[:3]) == []
        out = buf.feed(data[3:])
        assert len(out) == 1

    def test_two_frames_in_one_chunk(self):
        data = Message("PING", 1).encode() + Message("GET_POSE", 2).encode()
        out = _FrameBuffer().feed(data)
        assert [m.seq for m in out] == [1, 2]

    def test_unknown_kind_rejected(self):
        bad = Message("PING", 1)
        bad.kind = "EXPLODE"
        with pytest.raises(ProtocolViolation, match="violation"):
            _FrameBuffer().feed(bad.encode())

    def test_garbage_body_rejected(self):
        import struct

        body = b"not json"
        with pytest.raises(ProtocolViolation):
            _FrameBuffer().feed(struct.pack(">I", len(body)) + body)

    def test_oversized_frame_rejected(self):
        import struct

        with pytest.raises(ProtocolViolation):
            _FrameBuffer().feed(struct.pack(">I", 1 << 24))


class TestPortConfig:
    def test_default(self, monkeypatch):
        monkeypatch.delenv(PORT_ENV_VAR, raising=False)
        assert default_port() == DEFAULT_PORT == 7450

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv(PORT_ENV_VAR, "9999")
        assert default_port() == 9999


@pytest.fixture
def servo_server():
    servo = HapticServo(VirtualStylus(), HoldSource(Pose.translation((1, 2, 3))))
    server = HapticServer(
        servo.latest_state_payload, servo.stage_model, on_disconnect=servo.reset_model, port=0
    )
    servo.server = server
    yield servo, server
    server.close()


def lockstep(servo, server):
    t = [0.0]

    def pump():
        servo.tick(t[0])
        t[0] += 1.0
        server.serve_step()

    return pump


class TestRequestResponse:
    def test_ping(self, servo_server):
        servo, server = servo_server
        client = HapticClient(port=server.port)
        client.ping(pump=lockstep(servo, server))
        client.close()

    def test_get_pose_returns_latest_sample(self, servo_server):
        servo, server = servo_server
        client = HapticClient(port=server.port)
        payload = client.get_pose(pump=lockstep(servo, server))
        np.testing.assert_allclose(payload["pose"]["position_mm"], [1, 2, 3])
        assert payload["seq"] >= 1
        client.close()

    def test_set_force_model_staged(self, servo_server):
        servo, server = servo_server
        client = HapticClient(port=server.port)
        model = ConstraintModel(active=True, anchor_mm=(0, 0, 0), normal=(0, 0, 1))
        client.set_force_model(model.to_dict(), pump=lockstep(servo, server))
        assert servo.model.active
        np.testing.assert_allclose(servo.model.normal, [0, 0, 1])
        client.close()

    def test_seq_echo_increments(self, servo_server):
        servo, server = servo_server
        client = HapticClient(port=server.port)
        pump = lockstep(servo, server)
        r1 = client.request("PING", pump=pump)
        r2 = client.request("PING", pump=pump)
        assert (r1.seq, r2.seq) == (1, 2)
        client.close()

    def test_disconnect_resets_model(self, servo_server):
        servo, server = servo_server
        client = HapticClient(port=server.port)
        pump = lockstep(servo, server)
        client.set_force_model(
            ConstraintModel(active=True, normal=(0, 0, 1)).to_dict(), pump=pump
        )
        assert servo.model.active
        client.close()
        deadline = time.monotonic() + 2.0
        while servo.model.active and time.monotonic() < deadline:
            pump()
        assert not servo.model.active

    def test_timeout_when_unpumped(self, servo_server):
        servo, server = servo_server
        server.serve_step()  # allow accept on first poll
        client = HapticClient(port=server.port)
        with pytest.raises(ProtocolTimeout, match="unresponsive"):
            client.request("PING", timeout_ms=100.0)
        client.close()

    def test_threaded_servo_serves_requests(self, servo_server):
        servo, server = servo_server
        servo.start(rate_hz=1000.0)
        try:
            client = HapticClient(port=server.port)
            for _ in range(20):
                payload = client.get_pose(timeout_ms=500.0)
                assert "pose" in payload
            client.close()
        finally:
            servo.stop()


class TestNonBlocking:
    def test_serve_step_returns_immediately_without_client(self, servo_server):
        _, server = servo_server
        t0 = time.perf_counter()
        for _ in range(1000):
            server.serve_step()
        assert time.perf_counter() - t0 < 0.5

    def test_stalled_client_does_not_block_serve_step(self, servo_server):
        servo, server = servo_server
        import socket

        raw = socket.create_connection(("127.0.0.1", server.port))
        server.serve_step()  # accept
        raw.sendall(Message("GET_POSE", 1).encode()[:5])  # stall mid-frame
        t0 = time.perf_counter()
        for _ in range(2000):
            servo.tick(0.0)
            server.serve_step()
        assert time.perf_counter() - t0 < 2.0
        raw.close()
