import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vworkcell.device import (
    DEFAULT_LIMITS,
    ContinuousForceMonitor,
    DeviceLimits,
    DeviceScript,
    HoldSource,
    Keyframe,
    StylusState,
    VirtualStylus,
    clamp_force,
)
from vworkcell.geometry.pose import Pose


class TestLimits:
    def test_defaults(self):
        assert DEFAULT_LIMITS.workspace_mm == (160.0, 130.0, 130.0)
        assert DEFAULT_LIMITS.resolution_mm == 0.02
        assert DEFAULT_LIMITS.force_peak_n == 6.4
        assert DEFAULT_LIMITS.force_continuous_n == 1.4

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            DeviceLimits(resolution_mm=0.0)
        with pytest.raises(ValueError):
            DeviceLimits(force_continuous_n=10.0)


class TestSampling:
    def test_workspace_clamp(self):
        stylus = VirtualStylus()
        s = stylus.sample(Pose.translation((500, -500, 70)), False)
        np.testing.assert_allclose(s.pose.position, [80, -65, 65])

    def test_quantization_step(self):
        stylus = VirtualStylus()
        s = stylus.sample(Pose.translation((10.013, -10.013, 0.009)), False)
        np.testing.assert_allclose(s.pose.position, [10.02, -10.02, 0.0], atol=1e-12)

    def test_half_rounds_away_from_zero(self):
        stylus = VirtualStylus()
        s = stylus.sample(Pose.translation((0.01, -0.01, 0.0)), False)
        np.testing.assert_allclose(s.pose.position, [0.02, -0.02, 0.0], atol=1e-12)

    def test_seq_monotone_and_latest(self):
        stylus = VirtualStylus()
        assert stylus.latest() is None
        a = stylus.sample(Pose.identity(), False, 1.0)
        b = stylus.sample(Pose.identity(), True, 2.0)
        assert (a.seq, b.seq) == (1, 2)
        assert stylus.latest() is b

    @given(st.floats(-200, 200), st.floats(-200, 200), st.floats(-200, 200))
    def test_samples_on_grid_inside_workspace(self, x, y, z):
        stylus = VirtualStylus()
        p = stylus.sample(Pose.translation((x, y, z)), False).pose.position
        hx, hy, hz = (w / 2 for w in DEFAULT_LIMITS.workspace_mm)
        assert -hx <= p[0] <= hx and -hy <= p[1] <= hy and -hz <= p[2] <= hz
        for c in p:
            assert abs(c / 0.02 - round(c / 0.02)) < 1e-6

    def test_state_dict_round_trip(self):
        s = StylusState(Pose.translation((1, 2, 3)), True, 7, 123.0)
        r = StylusState.from_dict(s.to_dict())
        assert r.pose.approx_equal(s.pose) and r.button_down and r.seq == 7


class TestForceClamp:
    def test_under_peak_untouched(self):
        cmd = clamp_force((1.0, 2.0, 3.0))
        np.testing.assert_allclose(cmd.force_n, [1, 2, 3])
        assert not cmd.clamped

    def test_over_peak_rescaled(self):
        cmd = clamp_force((0.0, 0.0, 10.0))
        np.testing.assert_allclose(cmd.force_n, [0, 0, 6.4], atol=1e-12)
        assert cmd.clamped

    def test_direction_preserved(self):
        cmd = clamp_force((3.0, 4.0, 12.0))
        assert cmd.magnitude() == pytest.approx(6.4)
        np.testing.assert_allclose(
            cmd.force_n / cmd.magnitude(), np.array([3, 4, 12]) / 13.0, atol=1e-12
        )

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            clamp_force((math.nan, 0, 0))


class TestContinuousMonitor:
    def test_warning_counter_not_clamping(self):
        mon = ContinuousForceMonitor()
        for i in range(100):
            cmd = clamp_force((0, 0, 2.0))
            mon.update(cmd, i * 10.0)
            np.testing.assert_allclose(cmd.force_n, [0, 0, 2.0])
        assert mon.warnings > 0

    def test_no_warning_under_rating(self):
        mon = ContinuousForceMonitor()
        for i in range(100):
            mon.update(clamp_force((0, 0, 1.0)), i * 10.0)
        assert mon.warnings == 0

    def test_window_slides(self):
        mon = ContinuousForceMonitor()
        mon.update(clamp_force((0, 0, 6.0)), 0.0)
        mean = mon.update(clamp_force((0, 0, 0.0)), 2000.0)
        assert mean == pytest.approx(0.0)


class TestScript:
    def test_linear_interpolation(self):
        script = DeviceScript(
            [
                Keyframe(0.0, Pose.translation((0, 0, 0))),
                Keyframe(1000.0, Pose.translation((10, 0, 0))),
            ]
        )
        pose, _ = script.pose_at(250.0)
        np.testing.assert_allclose(pose.position, [2.5, 0, 0], atol=1e-12)

    def test_holds_ends(self):
        script = DeviceScript([Keyframe(100.0, Pose.translation((5, 5, 5)), button=True)])
        for t in (-50.0, 100.0, 1e6):
            pose, button = script.pose_at(t)
            np.testing.assert_allclose(pose.position, [5, 5, 5])
            assert button

    def test_unordered_rejected(self):
        with pytest.raises(ValueError, match="ordered"):
            DeviceScript([Keyframe(10.0, Pose.identity()), Keyframe(0.0, Pose.identity())])

    def test_save_load_round_trip(self, tmp_path):
        script = DeviceScript(
            [
                Keyframe(0.0, Pose.from_axis_angle((0, 0, 1), 0.4, (1, 2, 3)), True),
                Keyframe(500.0, Pose.translation((9, 9, 9))),
            ]
        )
        path = tmp_path / "script.json"
        script.save(path)
        loaded = DeviceScript.load(path)
        assert loaded.duration_ms == 500.0
        assert loaded.keyframes[0].button
        assert loaded.keyframes[0].pose.approx_equal(script.keyframes[0].pose, 1e-12)


class TestHoldSource:
    def test_holds_last_pose(self):
        src = HoldSource()
        src.set(Pose.translation((1, 1, 1)), True)
        pose, button = src.pose_at(999.0)
        np.testing.assert_allclose(pose.position, [1, 1, 1])
        assert button
