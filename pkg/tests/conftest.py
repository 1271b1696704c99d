import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

_verdicts: list[str] = []


def record_verdict(line: str) -> None:
    """Collect an acceptance verdict line for the terminal summary (writing to
    stdout directly is swallowed by fd-level capture)."""
    _verdicts.append(line)


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in _verdicts:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class LockstepRig:
    """Full in-process stack (stylus, servo, TCP server/client, session) driven
    in lockstep: every protocol wait pumps the servo tick and the server poll,
    so tests are deterministic and never race the wall clock."""

    def __init__(self, scene, state_log_path=None):
        from vworkcell.device import HoldSource, VirtualStylus
        from vworkcell.protocol import HapticClient, HapticServer
        from vworkcell.servo import HapticServo
        from vworkcell.session import Session

        self.source = HoldSource()
        self.servo = HapticServo(VirtualStylus(), self.source)
        self.server = HapticServer(
            self.servo.latest_state_payload,
            self.servo.stage_model,
            on_disconnect=self.servo.reset_model,
            port=0,
        )
        self.servo.server = self.server
        self.t = 0.0
        self.client = HapticClient(port=self.server.port)
        self.session = Session(scene, self.client, pump=self.pump, state_log_path=state_log_path)

    def pump(self):
        self.servo.tick(self.t)
        self.t += 1.0
        self.server.serve_step()

    def move_device(self, position, quat=(1, 0, 0, 0), button=False):
        from vworkcell.geometry.pose import Pose

        self.source.set(Pose(np.asarray(position, float), np.asarray(quat, float)), button)

    def close(self):
        self.session.close()
        self.client.close()
        self.server.close()


@pytest.fixture
def make_rig():
    rigs = []

    def factory(scene, state_log_path=None):
        rig = LockstepRig(scene, state_log_path)
        rigs.append(rig)
        return rig

    yield factory
    for rig in rigs:
        rig.close()


def write_scene(tmp_path: Path, scene: dict, name: str = "scene.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(scene), encoding="utf-8")
    return path


def write_script(tmp_path: Path, keyframes: list[dict], name: str = "script.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(keyframes), encoding="utf-8")
    return path


def basic_collision_scene(margin: float = 5.0, level: str = "medium") -> dict:
    """A 100 mm cube between two walls; drives into the +x wall."""
    return {
        "entities": [
            {
                "name": "part",
                "kind": "solid",
                "mesh": {"box": [100, 100, 100]},
                "pose": {"position_mm": [0, 0, 0], "quat_wxyz": [1, 0, 0, 0]},
                "pivot": "geometric_center",
            },
            {
                "name": "wall",
                "kind": "solid",
                "mesh": {"box": [50, 400, 400]},
                "pose": {"position_mm": [200, 0, 0], "quat_wxyz": [1, 0, 0, 0]},
            },
        ],
        "collision_pairs": [[["part"], ["wall"]]],
        "config": {"default_level": level, "selected": "part", "safety_margin_mm": margin},
    }


def straight_script(distance_mm: float, duration_ms: float, axis=(1, 0, 0)) -> list[dict]:
    ax = np.asarray(axis, dtype=float)
    return [
        {"t_ms": 0, "position_mm": [0, 0, 0], "quat_wxyz": [1, 0, 0, 0]},
        {
            "t_ms": duration_ms,
            "position_mm": [float(v) for v in distance_mm * ax],
            "quat_wxyz": [1, 0, 0, 0],
        },
    ]
