"""Virtual desktop stylus device.

6-DOF pose sensing inside a 160 x 130 x 130 mm workspace at 0.02 mm position
resolution, 3-DOF force output limited to 6.4 N peak / 1.4 N continuous, and a
single select button. Drivable from a keyframe script or external teleop; the
servo loop reads the latest complete sample without blocking the writer.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry.pose import Pose, slerp


@dataclass(frozen=True)
class DeviceLimits:
    workspace_mm: tuple[float, float, float] = (160.0, 130.0, 130.0)
    resolution_mm: float = 0.02
    force_peak_n: float = 6.4
    force_continuous_n: float = 1.4

    def __post_init__(self):
        if min(self.workspace_mm) <= 0 or self.resolution_mm <= 0:
            raise ValueError("workspace and resolution must be positive")
        if not 0 < self.force_continuous_n <= self.force_peak_n:
            raise ValueError("continuous rating must be in (0, peak]")


DEFAULT_LIMITS = DeviceLimits()


@dataclass
class StylusState:
    pose: Pose
    button_down: bool
    seq: int
    timestamp_ms: float

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_dict(),
            "button_down": self.button_down,
            "seq": self.seq,
            "timestamp_ms": self.timestamp_ms,
        }

    @staticmethod
    def from_dict(d: dict) -> "StylusState":
        return StylusState(
            Pose.from_dict(d["pose"]), bool(d["button_down"]), int(d["seq"]), float(d["timestamp_ms"])
        )


@dataclass
class ForceCommand:
    force_n: np.ndarray
    clamped: bool
    seq: int = 0

    def magnitude(self) -> float:
        return float(np.linalg.norm(self.force_n))


def _quantize(x: float, step: float) -> float:
    # round to nearest multiple, halves away from zero
    return math.floor(abs(x) / step + 0.5) * step * (1.0 if x >= 0 else -1.0)


def clamp_force(f, limits: DeviceLimits = DEFAULT_LIMITS, seq: int = 0) -> ForceCommand:
    """Rescale to the peak-force sphere when exceeded, preserving direction."""
    f = np.asarray(f, dtype=float).reshape(3)
    if not np.all(np.isfinite(f)):
        raise ValueError("force components must be finite")
    mag = float(np.linalg.norm(f))
    if mag <= limits.force_peak_n:
        return ForceCommand(f, False, seq)
    return ForceCommand(f * (limits.force_peak_n / mag), True, seq)


class ContinuousForceMonitor:
    """Rolling 1 s mean of |f|; exceeding the continuous rating bumps a warning
    counter (a device rating, not a control rule)."""

    def __init__(self, limits: DeviceLimits = DEFAULT_LIMITS, window_ms: float = 1000.0):
        self.limits = limits
        self.window_ms = window_ms
        self.samples: deque[tuple[float, float]] = deque()
        self._sum = 0.0
        self.warnings = 0

    def update(self, cmd: ForceCommand, t_ms: float) -> float:
        mag = cmd.magnitude()
        self.samples.append((t_ms, mag))
        self._sum += mag
        while self.samples and self.samples[0][0] < t_ms - self.window_ms:
            self._sum -= self.samples.popleft()[1]
        mean = self._sum / len(self.samples)
        if mean > self.limits.force_continuous_n:
            self.warnings += 1
        return mean


class VirtualStylus:
    """Single-writer sampling, lock-free latest-value snapshot for readers."""

    def __init__(self, limits: DeviceLimits = DEFAULT_LIMITS):
        self.limits = limits
        self._seq = 0
        self._latest: StylusState | None = None

    def sample(self, raw: Pose, button: bool, t_ms: float = 0.0) -> StylusState:
        hx, hy, hz = (w / 2.0 for w in self.limits.workspace_mm)
        p = raw.position
        clamped = (
            min(max(p[0], -hx), hx),
            min(max(p[1], -hy), hy),
            min(max(p[2], -hz), hz),
        )
        step = self.limits.resolution_mm
        quantized = np.array([_quantize(c, step) for c in clamped])
        self._seq += 1
        state = StylusState(Pose(quantized, raw.orientation.copy()), button, self._seq, t_ms)
        self._latest = state  # single reference assignment: atomic handoff
        return state

    def latest(self) -> StylusState | None:
        return self._latest


@dataclass
class Keyframe:
    t_ms: float
    pose: Pose
    button: bool = False


@dataclass
class DeviceScript:
    """Piecewise-linear position / slerp orientation keyframe source."""

    keyframes: list[Keyframe] = field(default_factory=list)

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("script needs at least one keyframe")
        ts = [k.t_ms for k in self.keyframes]
        if ts != sorted(ts):
            raise ValueError("keyframes must be time-ordered")

    @property
    def duration_ms(self) -> float:
        return self.keyframes[-1].t_ms

    def pose_at(self, t_ms: float) -> tuple[Pose, bool]:
        kfs = self.keyframes
        if t_ms <= kfs[0].t_ms:
            return kfs[0].pose.copy(), kfs[0].button
        if t_ms >= kfs[-1].t_ms:
            return kfs[-1].pose.copy(), kfs[-1].button
        for i in range(len(kfs) - 1):
            k0, k1 = kfs[i], kfs[i + 1]
            if k0.t_ms <= t_ms <= k1.t_ms:
                span = k1.t_ms - k0.t_ms
                u = 0.0 if span <= 0 else (t_ms - k0.t_ms) / span
                return slerp(k0.pose, k1.pose, u), k0.button
        return kfs[-1].pose.copy(), kfs[-1].button  # unreachable

    @staticmethod
    def load(path) -> "DeviceScript":
        with open(Path(path), "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        kfs = [
            Keyframe(
                float(e["t_ms"]),
                Pose(np.asarray(e["position_mm"], dtype=float), np.asarray(e["quat_wxyz"], dtype=float)),
                bool(e.get("button", False)),
            )
            for e in raw
        ]
        return DeviceScript(kfs)

    def save(self, path) -> None:
        entries = [
            {
                "t_ms": k.t_ms,
                "position_mm": [float(v) for v in k.pose.position],
                "quat_wxyz": [float(v) for v in k.pose.orientation],
                "button": k.button,
            }
            for k in self.keyframes
        ]
        with open(Path(path), "w", encoding="utf-8") as fh:
            json.dump(entries, fh, indent=2)


class HoldSource:
    """Teleop source: holds the last externally supplied pose."""

    def __init__(self, pose: Pose | None = None):
        self.pose = pose or Pose.identity()
        self.button = False

    def set(self, pose: Pose, button: bool) -> None:
        self.pose = pose
        self.button = button

    def pose_at(self, t_ms: float) -> tuple[Pose, bool]:
        return self.pose, self.button
