"""Headless entry points: run scripted sessions, serve the live system,
replay committed-state logs, benchmark the servo loop.

Exit codes: 0 clean, 1 usage/input error, 2 invariant violation detected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from pathlib import Path

import numpy as np

from .device import DeviceScript, VirtualStylus
from .geometry.distance import closest_pair_brute
from .protocol import HapticClient, HapticServer, ProtocolError, default_port
from .servo import HapticServo, TimingReport
from .session import Scene, SceneError, Session, load_scene, save_trajectory

UI_PORT_ENV_VAR = "VWC_UI_PORT"
DEFAULT_UI_PORT = 7451


class _ScriptAtSimTime:
    """Device source pinned to session-controlled simulated time (lockstep)."""

    def __init__(self, script: DeviceScript):
        self.script = script
        self.t_ms = 0.0

    def pose_at(self, _real_t_ms: float):
        return self.script.pose_at(self.t_ms)


def _apply_overrides(scene: Scene, args) -> None:
    if getattr(args, "scale_level", None):
        scene.config.mapping.scale_level = args.scale_level
    if getattr(args, "frame_mode", None):
        scene.config.mapping.frame_mode = args.frame_mode
    if getattr(args, "force_law", None):
        scene.config.force_law.law_class = args.force_law
    if getattr(args, "select", None):
        scene.selected = args.select


def _load_config_file(scene: Scene, path) -> None:
    from .session import SessionConfig

    with open(path, "r", encoding="utf-8") as fh:
        scene.config = SessionConfig.from_dict(json.load(fh))


def cmd_run(args) -> int:
    try:
        scene = load_scene(args.scene)
        if args.config:
            _load_config_file(scene, args.config)
        _apply_overrides(scene, args)
        script = DeviceScript.load(args.script)
    except (SceneError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.duration_ms <= 0:
        print("error: duration must be positive", file=sys.stderr)
        return 1

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    source = _ScriptAtSimTime(script)
    stylus = VirtualStylus()
    servo = HapticServo(stylus, source)
    server = HapticServer(
        servo.latest_state_payload, servo.stage_model, servo.reset_model, port=args.haptic_port
    )
    client = HapticClient(port=server.port)

    def pump():
        servo.tick(source.t_ms)
        server.serve_step()

    session = Session(scene, client, pump=pump, state_log_path=out_dir / "state_log.jsonl")
    try:
        if scene.selected is None:
            print("error: no entity selected (scene config.selected or --select)", file=sys.stderr)
            return 1
        if args.record_mode:
            session.start_recording(args.record_mode, args.record_interval_ms, args.record_interval_mm)
        source.t_ms = 0.0
        session._poll()
        session.engage()
        t = 0.0
        violation = False
        while t <= args.duration_ms:
            source.t_ms = t
            report = session.step(t)
            if report.committed and report.min_distance == 0.0:
                violation = True
            t += args.step_ms
        traj = session.stop_recording()
        if traj is not None:
            save_trajectory(traj, out_dir / "trajectory.json")
        return 2 if violation else 0
    finally:
        session.close()
        client.close()
        server.close()


def cmd_replay(args) -> int:
    """Re-check every committed state in a log with the exhaustive oracle."""
    try:
        scene = load_scene(args.scene)
        entries = [json.loads(line) for line in open(args.log, encoding="utf-8") if line.strip()]
    except (SceneError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    violations = 0
    checked = 0
    for entry in entries:
        if not entry.get("committed") or "entity_state" not in entry:
            continue
        scene.apply_entity_state(entry["entity"], entry["entity_state"])
        for ga, gb in entry.get("active_pairs", []):
            meshes_a = [m for n in ga for m in scene.entities[n].posed_meshes()]
            meshes_b = [m for n in gb for m in scene.entities[n].posed_meshes()]
            for mesh_a, pose_a in meshes_a:
                for mesh_b, pose_b in meshes_b:
                    w = closest_pair_brute(mesh_a, pose_a, mesh_b, pose_b)
                    checked += 1
                    if w.distance == 0.0:
                        violations += 1
                        print(f"violation at t={entry['t_ms']} ms: distance 0")
    print(f"replay: {checked} oracle queries, {violations} violations")
    return 2 if violations else 0


def _bench_client(port: int, stop: threading.Event, stall_at_s: float | None, duration_s: float):
    client = HapticClient(port=port)
    t0 = time.monotonic()
    stalled = False
    toggle = 0
    try:
        while not stop.is_set():
            elapsed = time.monotonic() - t0
            if elapsed > duration_s:
                break
            if stall_at_s is not None and not stalled and elapsed >= stall_at_s:
                time.sleep(1.0)  # injected client stall
                stalled = True
            try:
                client.get_pose()
            except ProtocolError:
                break  # servo wound down before the client; not an error
            # synthetic contact switching
            toggle += 1
            if toggle % 10 == 0:
                active = (toggle // 10) % 2 == 1
                try:
                    client.set_force_model(
                        {
                            "active": active,
                            "anchor_mm": [0.0, 0.0, 10.0],
                            "normal": [0.0, 0.0, 1.0],
                            "law_class": "variable" if active else "constant",
                        }
                    )
                except ProtocolError:
                    break
            time.sleep(0.01)
    finally:
        client.close()


def _bench_once(duration_s: float, stall: bool) -> TimingReport:
    import math

    from .device import Keyframe
    from .geometry.pose import Pose

    script = DeviceScript(
        [
            Keyframe(0.0, Pose.translation((0.0, 0.0, 20.0))),
            Keyframe(duration_s * 500.0, Pose.translation((0.0, 0.0, -20.0))),
            Keyframe(duration_s * 1000.0, Pose.translation((0.0, 0.0, 20.0))),
        ]
    )
    stylus = VirtualStylus()
    servo = HapticServo(stylus, script)
    server = HapticServer(servo.latest_state_payload, servo.stage_model, servo.reset_model, port=0)
    servo.server = server
    stop = threading.Event()
    client_thread = threading.Thread(
        target=_bench_client,
        args=(server.port, stop, duration_s / 2.0 if stall else None, duration_s),
        daemon=True,
    )
    client_thread.start()
    try:
        report = servo.run(duration_s)
    finally:
        stop.set()
        client_thread.join(timeout=3.0)
        server.close()
    return report


def cmd_bench(args) -> int:
    if args.duration_s <= 0:
        print("error: duration must be positive", file=sys.stderr)
        return 1
    baseline = _bench_once(args.duration_s, stall=False)
    stalled = _bench_once(args.duration_s, stall=True)
    ratio = stalled.p99_period_us / baseline.p99_period_us if baseline.p99_period_us else float("inf")
    non_blocking = ratio < 1.05
    out = {
        "baseline": baseline.to_dict(),
        "with_stall": stalled.to_dict(),
        "p99_ratio": ratio,
        "non_blocking": "PASS" if non_blocking else "FAIL",
    }
    print(json.dumps(out, indent=2))
    ok = (
        baseline.achieved_hz >= 990.0
        and baseline.missed < 0.001 * baseline.ticks
        and non_blocking
    )
    return 0 if ok else 2


def cmd_serve(args) -> int:
    from .bridge import serve_forever

    try:
        scene = load_scene(args.scene)
        if args.config:
            _load_config_file(scene, args.config)
        _apply_overrides(scene, args)
    except (SceneError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ui_port = args.ui_port if args.ui_port is not None else int(
        os.environ.get(UI_PORT_ENV_VAR, DEFAULT_UI_PORT)
    )
    return serve_forever(scene, haptic_port=args.haptic_port, ui_port=ui_port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vworkcell", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scripted session headless")
    run.add_argument("--scene", required=True)
    run.add_argument("--script", required=True, help="device keyframe script (JSON)")
    run.add_argument("--duration-ms", type=float, default=None)
    run.add_argument("--step-ms", type=float, default=33.0)
    run.add_argument("--out-dir", default="out")
    run.add_argument("--haptic-port", type=int, default=0)
    run.add_argument("--config", default=None)
    run.add_argument("--select", default=None)
    run.add_argument("--scale-level", choices=("rough", "medium", "fine", "screen"), default=None)
    run.add_argument("--frame-mode", choices=("world", "screen", "user"), default=None)
    run.add_argument("--force-law", choices=("constant", "variable"), default=None)
    run.add_argument("--record-mode", choices=("manual", "auto_time", "auto_distance"), default=None)
    run.add_argument("--record-interval-ms", type=float, default=500.0)
    run.add_argument("--record-interval-mm", type=float, default=10.0)
    run.set_defaults(func=cmd_run)

    serve = sub.add_parser("serve", help="serve the live system for the web console")
    serve.add_argument("--scene", required=True)
    serve.add_argument("--haptic-port", type=int, default=None)
    serve.add_argument("--ui-port", type=int, default=None)
    serve.add_argument("--config", default=None)
    serve.add_argument("--select", default=None)
    serve.set_defaults(func=cmd_serve)

    replay = sub.add_parser("replay", help="verify a committed-state log with the exhaustive oracle")
    replay.add_argument("--scene", required=True)
    replay.add_argument("--log", required=True)
    replay.set_defaults(func=cmd_replay)

    bench = sub.add_parser("bench", help="benchmark servo timing and the non-blocking contract")
    bench.add_argument("--duration-s", type=float, default=10.0)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run" and args.duration_ms is None:
        args.duration_ms = DeviceScript.load(args.script).duration_ms
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
