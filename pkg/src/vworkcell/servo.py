"""The 1 kHz haptic servo loop.

Between two session updates the contact is frozen as a plane constraint
(anchor point + normal, device frame); each tick samples the stylus, computes
penetration against that plane, applies the selected force law and clamps to
the device peak. The loop keeps an absolute schedule (hybrid sleep + short
spin) and polls the protocol server opportunistically, never blocking on it.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .device import (
    DEFAULT_LIMITS,
    ContinuousForceMonitor,
    DeviceLimits,
    ForceCommand,
    StylusState,
    VirtualStylus,
    clamp_force,
)

_SPIN_MARGIN_S = 0.0005

LAW_CONSTANT = "constant"
LAW_VARIABLE = "variable"


@dataclass
class ConstraintModel:
    active: bool = False
    anchor_mm: np.ndarray = field(default_factory=lambda: np.zeros(3))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    law_class: str = LAW_VARIABLE
    f0_n: float = 2.0
    k_n_per_mm: float = 0.4
    mass_factor: float = 1.0

    def __post_init__(self):
        self.anchor_mm = np.asarray(self.anchor_mm, dtype=float).reshape(3)
        self.normal = np.asarray(self.normal, dtype=float).reshape(3)
        if self.law_class not in (LAW_CONSTANT, LAW_VARIABLE):
            raise ValueError(f"unknown force law class {self.law_class!r}")
        if self.f0_n <= 0 or self.k_n_per_mm <= 0:
            raise ValueError("force law gains must be positive")
        if self.active and abs(np.linalg.norm(self.normal) - 1.0) > 1e-9:
            raise ValueError("active constraint needs a unit normal")

    @staticmethod
    def inactive() -> "ConstraintModel":
        return ConstraintModel(active=False)

    def to_dict(self) -> dict:
        return {
            "active": self.active,
            "anchor_mm": [float(v) for v in self.anchor_mm],
            "normal": [float(v) for v in self.normal],
            "law_class": self.law_class,
            "f0_n": self.f0_n,
            "k_n_per_mm": self.k_n_per_mm,
            "mass_factor": self.mass_factor,
        }

    @staticmethod
    def from_dict(d: dict) -> "ConstraintModel":
        return ConstraintModel(
            active=bool(d.get("active", False)),
            anchor_mm=np.asarray(d.get("anchor_mm", (0.0, 0.0, 0.0)), dtype=float),
            normal=np.asarray(d.get("normal", (0.0, 0.0, 1.0)), dtype=float),
            law_class=d.get("law_class", LAW_VARIABLE),
            f0_n=float(d.get("f0_n", 2.0)),
            k_n_per_mm=float(d.get("k_n_per_mm", 0.4)),
            mass_factor=float(d.get("mass_factor", 1.0)),
        )


def force_law(model: ConstraintModel, penetration_mm: float, limits: DeviceLimits = DEFAULT_LIMITS) -> np.ndarray:
    """Force vector (N) for a given plane penetration, clamped to the peak."""
    if penetration_mm < 0:
        raise ValueError("penetration must be non-negative")
    if not model.active or penetration_mm == 0.0:
        return np.zeros(3)
    if model.law_class == LAW_CONSTANT:
        f = model.f0_n * model.normal
    else:
        f = (model.k_n_per_mm * penetration_mm * model.mass_factor) * model.normal
    return clamp_force(f, limits).force_n


def plane_penetration(model: ConstraintModel, position_mm: np.ndarray) -> float:
    if not model.active:
        return 0.0
    return max(0.0, float(np.dot(model.anchor_mm - position_mm, model.normal)))


def servo_tick(stylus: StylusState, model: ConstraintModel, limits: DeviceLimits = DEFAULT_LIMITS) -> ForceCommand:
    """Pure force computation for one tick: latest sample + latest model."""
    pen = plane_penetration(model, stylus.pose.position)
    return clamp_force(force_law(model, pen, limits), limits, seq=stylus.seq)


@dataclass
class TimingReport:
    ticks: int = 0
    missed: int = 0
    mean_period_us: float = 0.0
    p99_period_us: float = 0.0
    achieved_hz: float = 0.0
    duration_s: float = 0.0
    degraded: bool = False

    def to_dict(self) -> dict:
        return {
            "ticks": self.ticks,
            "missed": self.missed,
            "mean_period_us": self.mean_period_us,
            "p99_period_us": self.p99_period_us,
            "achieved_hz": self.achieved_hz,
            "duration_s": self.duration_s,
            "degraded": self.degraded,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _try_realtime_priority() -> int | None:
    """Best-effort SCHED_FIFO for the calling thread; returns the old policy."""
    try:
        old = os.sched_getscheduler(0)
        os.sched_setscheduler(0, os.SCHED_FIFO, os.sched_param(50))
        return old
    except (PermissionError, OSError, AttributeError):
        return None


class HapticServo:
    """Owns the stylus, the staged constraint model and the periodic loop.

    The session (via the protocol server) writes `model` with a single
    reference assignment; the loop reads whatever is latest each tick.
    """

    def __init__(self, stylus: VirtualStylus, source, limits: DeviceLimits = DEFAULT_LIMITS):
        self.stylus = stylus
        self.source = source
        self.limits = limits
        self.model = ConstraintModel.inactive()
        self.last_command = ForceCommand(np.zeros(3), False, 0)
        self.monitor = ContinuousForceMonitor(limits)
        self.server = None  # optional protocol.HapticServer, polled between ticks
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # -- protocol wiring ---------------------------------------------------
    def latest_state_payload(self) -> dict | None:
        state = self.stylus.latest()
        return state.to_dict() if state is not None else None

    def stage_model(self, payload: dict) -> None:
        self.model = ConstraintModel.from_dict(payload)

    def reset_model(self) -> None:
        self.model = ConstraintModel.inactive()

    # -- loop --------------------------------------------------------------
    def tick(self, t_ms: float) -> ForceCommand:
        raw, button = self.source.pose_at(t_ms)
        state = self.stylus.sample(raw, button, t_ms)
        cmd = servo_tick(state, self.model, self.limits)
        self.last_command = cmd
        self.monitor.update(cmd, t_ms)
        return cmd

    def run(self, duration_s: float | None, rate_hz: float = 1000.0) -> TimingReport:
        """Fixed-rate loop; duration None runs until stop() is called."""
        if duration_s is not None and duration_s <= 0:
            return TimingReport()
        period = 1.0 / rate_hz
        max_ticks = None if duration_s is None else int(round(duration_s * rate_hz))
        starts: list[float] = []
        missed = 0
        old_policy = _try_realtime_priority()
        perf = time.perf_counter
        sleep = time.sleep
        try:
            t0 = perf()
            next_t = t0
            k = 0
            while not self._stop.is_set():
                if max_ticks is not None and k >= max_ticks:
                    break
                next_t += period
                while True:
                    rem = next_t - perf()
                    if rem <= 0:
                        break
                    if rem > _SPIN_MARGIN_S:
                        sleep(rem - _SPIN_MARGIN_S)
                now = perf()
                if now - next_t > period:
                    # overrun: count once and resynchronize rather than
                    # cascading one miss per skipped cycle
                    missed += 1
                    next_t = now
                starts.append(now)
                self.tick((now - t0) * 1000.0)
                if self.server is not None:
                    self.server.serve_step()
                k += 1
            t_end = perf()
        finally:
            if old_policy is not None:
                try:
                    os.sched_setscheduler(0, old_policy, os.sched_param(0))
                except OSError:
                    pass
        if not starts:
            return TimingReport()
        elapsed = t_end - t0
        periods = np.diff(np.asarray(starts))
        achieved = len(starts) / elapsed if elapsed > 0 else 0.0
        report = TimingReport(
            ticks=len(starts),
            missed=missed,
            mean_period_us=float(periods.mean() * 1e6) if len(periods) else 0.0,
            p99_period_us=float(np.percentile(periods, 99) * 1e6) if len(periods) else 0.0,
            achieved_hz=achieved,
            duration_s=elapsed,
            degraded=achieved < 0.99 * rate_hz,
        )
        return report

    def start(self, rate_hz: float = 1000.0) -> None:
        self._stop.clear()
        self._thread = threading.Thread(target=self.run, args=(None, rate_hz), daemon=True, name="haptic-servo")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
        self.last_command = ForceCommand(np.zeros(3), False, 0)


def run_servo(servo: HapticServo, duration_s: float, rate_hz: float = 1000.0) -> TimingReport:
    return servo.run(duration_s, rate_hz)
