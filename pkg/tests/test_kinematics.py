import math

import numpy as np
import pytest

from vworkcell.geometry.pose import Pose
from vworkcell.kinematics.chains import (
    IKSolveRecord,
    OutOfWorkspace,
    SerialChain,
    chain_jacobian,
    dls_ik,
    ik,
    planar_2r_chain,
    planar_3r_chain,
    spherical_6r_chain,
    wrap_angle,
)


class TestFK:
    def test_planar_2r_zero(self):
        chain = planar_2r_chain(1.0, 1.0)
        np.testing.assert_allclose(chain.fk([0, 0]).position, [2, 0, 0], atol=1e-12)

    def test_planar_2r_elbow_up(self):
        chain = planar_2r_chain(1.0, 1.0)
        pose = chain.fk([0.0, math.pi / 2])
        np.testing.assert_allclose(pose.position, [1, 1, 0], atol=1e-12)

    def test_spherical_6r_zero_points_up(self):
        chain = spherical_6r_chain(300, 400, 350, 80)
        np.testing.assert_allclose(chain.fk(np.zeros(6)).position, [0, 0, 1130], atol=1e-9)

    def test_base_offset(self):
        chain = planar_2r_chain(1.0, 1.0)
        pose = chain.fk([0, 0], base=Pose.translation((10, 0, 0)))
        np.testing.assert_allclose(pose.position, [12, 0, 0], atol=1e-12)

    def test_dict_round_trip(self):
        chain = planar_3r_chain(1, 1, 0.5)
        q = np.array([0.2, -0.4, 0.6])
        rebuilt = SerialChain.from_dict(
            {
                "family": chain.family,
                "name": chain.name,
                "tool": chain.tool.to_dict(),
                "joints": [
                    {
                        "type": j.type,
                        "axis": [float(v) for v in j.axis],
                        "origin": j.origin.to_dict(),
                        "limits": list(j.limits),
                    }
                    for j in chain.joints
                ],
            }
        )
        assert rebuilt.fk(q).approx_equal(chain.fk(q), 1e-12)


class TestAnalyticIK:
    def test_planar_2r_two_branches(self):
        chain = planar_2r_chain(1.0, 1.0)
        rec = ik(chain, Pose.translation((1.0, 1.0, 0.0)), q_prev=np.zeros(2))
        assert len(rec.solutions) == 2
        got = {tuple(np.round(q, 6)) for q in rec.solutions}
        assert (0.0, round(math.pi / 2, 6)) in got
        assert (round(math.pi / 2, 6), round(-math.pi / 2, 6)) in got

    def test_continuity_choice(self):
        chain = planar_2r_chain(1.0, 1.0)
        rec = ik(chain, Pose.translation((1.0, 1.0, 0.0)), q_prev=np.array([0.1, 1.4]))
        np.testing.assert_allclose(rec.q, [0.0, math.pi / 2], atol=1e-9)
        rec = ik(chain, Pose.translation((1.0, 1.0, 0.0)), q_prev=np.array([1.5, -1.5]))
        np.testing.assert_allclose(rec.q, [math.pi / 2, -math.pi / 2], atol=1e-9)

    def test_tie_breaks_to_lowest_branch(self):
        chain = planar_2r_chain(1.0, 1.0)
        # q_prev equidistant from both branches
        rec = ik(chain, Pose.translation((2.0, 0.0, 0.0)), q_prev=np.zeros(2))
        assert rec.chosen == 0

    def test_out_of_workspace(self):
        chain = planar_2r_chain(1.0, 1.0)
        with pytest.raises(OutOfWorkspace, match="out of workspace"):
            ik(chain, Pose.translation((3.0, 0.0, 0.0)), q_prev=np.zeros(2))

    def test_planar_3r_round_trip(self, rng):
        chain = planar_3r_chain(1.0, 1.0, 0.5)
        for _ in range(30):
            q = rng.uniform(-2.0, 2.0, size=3)
            target = chain.fk(q)
            rec = ik(chain, target, q_prev=q)
            assert chain.fk(rec.q).approx_equal(target, 1e-9)
            np.testing.assert_allclose(rec.q, q, atol=1e-9)

    def test_spherical_6r_eight_branches(self, rng):
        chain = spherical_6r_chain()
        for _ in range(20):
            q = rng.uniform(-1.2, 1.2, size=6)
            target = chain.fk(q)
            rec = ik(chain, target, q_prev=q)
            assert len(rec.solutions) >= 1
            for sol in rec.solutions:
                assert chain.fk(sol).approx_equal(target, 1e-6)
            np.testing.assert_allclose(rec.q, q, atol=1e-6)

    def test_spherical_generic_pose_has_eight(self):
        chain = spherical_6r_chain()
        q = np.array([0.3, 0.7, -0.5, 0.4, 0.6, -0.2])
        rec = ik(chain, chain.fk(q), q_prev=q)
        assert len(rec.solutions) == 8


class TestNumericIK:
    def test_jacobian_matches_finite_difference(self, rng):
        chain = spherical_6r_chain()
        q = rng.uniform(-1.0, 1.0, size=6)
        jac = chain_jacobian(chain, q)
        eps = 1e-7
        for j in range(6):
            dq = np.zeros(6)
            dq[j] = eps
            dp = (chain.fk(q + dq).position - chain.fk(q - dq).position) / (2 * eps)
            np.testing.assert_allclose(jac[:3, j], dp, atol=1e-5)

    def test_dls_converges(self):
        chain = spherical_6r_chain()
        q_goal = np.array([0.4, 0.9, -0.7, 0.2, 0.5, -0.1])
        target = chain.fk(q_goal)
        q = dls_ik(chain, target, q0=q_goal + 0.05)
        assert chain.fk(q).approx_equal(target, 1e-3)

    def test_dls_unreachable_raises(self):
        chain = planar_2r_chain(1.0, 1.0)
        with pytest.raises(OutOfWorkspace):
            dls_ik(chain, Pose.translation((5.0, 0.0, 0.0)), q0=np.zeros(2))

    def test_generic_family_uses_dls(self):
        chain = planar_2r_chain(1.0, 1.0)
        chain.family = "generic"
        target = chain.fk([0.3, 0.5])
        rec = ik(chain, target, q_prev=np.array([0.25, 0.45]))
        assert isinstance(rec, IKSolveRecord)
        assert len(rec.solutions) == 1
        assert chain.fk(rec.q).approx_equal(target, 1e-3)


class TestHelpers:
    def test_wrap_angle(self):
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert abs(wrap_angle(-3 * math.pi)) == pytest.approx(math.pi)
        assert wrap_angle(0.5) == pytest.approx(0.5)

    def test_limits_filter_branches(self):
        chain = planar_2r_chain(1.0, 1.0, limits=[(-math.pi, math.pi), (0.0, math.pi)])
        rec = ik(chain, Pose.translation((1.0, 1.0, 0.0)), q_prev=np.zeros(2))
        # elbow-down branch (q2 < 0) is outside the limits
        assert len(rec.solutions) == 1
        assert rec.q[1] >= 0.0
