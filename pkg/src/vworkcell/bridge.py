"""WebSocket bridge between the session loop and the operator web console.

The browser drives the virtual stylus (teleop pose + button + clutch) and
issues control-panel commands; the bridge streams scene state, stylus proxy,
force vector, witness segment and recording status back after every session
step. All scene mutation stays in the session thread: client messages are
queued and drained there. When the last console disconnects the force model
is reset (fail-safe zero force) and the clutch disengages; entity poses are
retained.

Client -> server JSON messages ({"type": ...}):
  teleop_pose {position_mm, quat_wxyz, button}
  clutch      {engaged}
  select      {name}
  handle_mode {mode}            pivot {mode}
  scale       {level}           frame {mode}
  zoom        {factor}          record {action, mode, interval_ms, interval_mm}
Server -> client: {"type": "state", scene_state, stylus, force, witness,
recording, selection, mapping, seq}.
"""

from __future__ import annotations

import json
import queue
import threading
import time

import numpy as np

from .device import HoldSource, VirtualStylus
from .geometry.pose import Pose
from .protocol import HapticClient, HapticServer
from .servo import HapticServo
from .session import Scene, SceneError, Session

SESSION_RATE_HZ = 30.0


class Bridge:
    def __init__(self, scene: Scene, haptic_port=None):
        self.source = HoldSource()
        self.stylus = VirtualStylus()
        self.servo = HapticServo(self.stylus, self.source)
        self.server = HapticServer(
            self.servo.latest_state_payload,
            self.servo.stage_model,
            self.servo.reset_model,
            port=haptic_port,
        )
        self.servo.server = self.server
        self.servo.start()
        self.client = HapticClient(port=self.server.port)
        self.session = Session(scene, self.client)
        self.commands: queue.Queue[dict] = queue.Queue()
        self.clients: set = set()
        self.clients_lock = threading.Lock()
        self._stop = threading.Event()
        self._seq = 0
        self._thread: threading.Thread | None = None

    # -- command handling (session thread only) -----------------------------
    def _apply(self, cmd: dict) -> None:
        kind = cmd.get("type")
        session = self.session
        scene = session.scene
        try:
            if kind == "teleop_pose":
                pose = Pose(
                    np.asarray(cmd["position_mm"], dtype=float),
                    np.asarray(cmd.get("quat_wxyz", (1.0, 0.0, 0.0, 0.0)), dtype=float),
                )
                self.source.set(pose, bool(cmd.get("button", False)))
            elif kind == "clutch":
                if cmd.get("engaged"):
                    session.engage()
                else:
                    session.disengage()
            elif kind == "select":
                session.select(cmd.get("name"))
            elif kind == "handle_mode":
                entity = session.selected_entity
                if entity is not None and entity.kind != "solid":
                    entity.handle_mode = cmd["mode"]
            elif kind == "pivot":
                entity = session.selected_entity
                if entity is not None and entity.kind == "solid":
                    entity.pivot_mode = cmd["mode"]
            elif kind == "scale":
                scene.config.mapping.scale_level = cmd["level"]
            elif kind == "frame":
                scene.config.mapping.frame_mode = cmd["mode"]
            elif kind == "zoom":
                factor = float(cmd["factor"])
                if factor > 0:
                    scene.config.mapping.viewport.world_span_mm /= factor
            elif kind == "record":
                if cmd.get("action") == "start":
                    session.start_recording(
                        cmd.get("mode", "manual"),
                        float(cmd.get("interval_ms", 500.0)),
                        float(cmd.get("interval_mm", 10.0)),
                    )
                else:
                    session.stop_recording()
        except (SceneError, ValueError, KeyError):
            pass  # bad console input never kills the session

    # -- state snapshot ------------------------------------------------------
    def snapshot(self) -> dict:
        session = self.session
        scene = session.scene
        self._seq += 1
        cmd = self.servo.last_command
        stylus = session.last_stylus
        witness = session.last_witness
        rec = session.recorder
        return {
            "type": "state",
            "seq": self._seq,
            "scene_state": {
                name: scene.entity_state(name) for name in sorted(scene.entities)
            },
            "stylus": stylus.to_dict() if stylus else None,
            "force": {
                "force_n": [float(v) for v in cmd.force_n],
                "clamped": cmd.clamped,
                "magnitude_n": cmd.magnitude(),
            },
            "witness": witness.to_dict() if witness else None,
            "recording": {
                "active": rec is not None,
                "mode": rec.trajectory.mode if rec else None,
                "waypoints": len(rec.trajectory.waypoints) if rec else 0,
            },
            "selection": {
                "name": scene.selected,
                "handle_mode": getattr(session.selected_entity, "handle_mode", None),
                "clutch_engaged": session.clutch.engaged,
            },
            "mapping": {
                "scale_level": scene.config.mapping.scale_level,
                "frame_mode": scene.config.mapping.frame_mode,
                "world_span_mm": scene.config.mapping.viewport.world_span_mm,
                "factor": scene.config.mapping.translation_factor(),
            },
        }

    # -- loops ---------------------------------------------------------------
    def _session_loop(self) -> None:
        period = 1.0 / SESSION_RATE_HZ
        t0 = time.monotonic()
        while not self._stop.is_set():
            while True:
                try:
                    self._apply(self.commands.get_nowait())
                except queue.Empty:
                    break
            t_ms = (time.monotonic() - t0) * 1000.0
            try:
                self.session.step(t_ms)
            except Exception:
                pass  # a failed step must not kill the loop; next poll retries
            self._broadcast(json.dumps(self.snapshot()))
            time.sleep(period)

    def _broadcast(self, text: str) -> None:
        with self.clients_lock:
            conns = list(self.clients)
        for ws in conns:
            try:
                ws.send(text)
            except Exception:
                self._detach(ws)

    def _detach(self, ws) -> None:
        with self.clients_lock:
            self.clients.discard(ws)
            empty = not self.clients
        if empty:
            # console gone: zero force immediately, keep entity poses
            self.servo.reset_model()
            self.session.disengage()
            self.session._sent_model = None

    def handler(self, ws) -> None:
        with self.clients_lock:
            self.clients.add(ws)
        try:
            ws.send(json.dumps(self.snapshot()))
            for message in ws:
                try:
                    cmd = json.loads(message)
                except ValueError:
                    continue
                if isinstance(cmd, dict):
                    self.commands.put(cmd)
        except Exception:
            pass
        finally:
            self._detach(ws)

    def start(self) -> None:
        self._thread = threading.Thread(target=self._session_loop, daemon=True, name="session-loop")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=3.0)
        self.servo.stop()
        self.client.close()
        self.server.close()
        self.session.close()


def serve_forever(scene: Scene, haptic_port=None, ui_port: int = 7451) -> int:
    from websockets.sync.server import serve

    bridge = Bridge(scene, haptic_port=haptic_port)
    bridge.start()
    print(f"haptic server on tcp port {bridge.server.port}, console on ws port {ui_port}", flush=True)
    try:
        with serve(bridge.handler, "127.0.0.1", ui_port) as ws_server:
            ws_server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        bridge.stop()
    return 0
