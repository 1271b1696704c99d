import numpy as np
import pytest

from vworkcell.geometry.pose import Pose
from vworkcell.kinematics.mannequin import Mannequin, SolveError, TreeJoint, default_mannequin


@pytest.fixture(scope="module")
def manny():
    return default_mannequin()


class TestStructure:
    def test_56_dof(self, manny):
        assert manny.dof == 56

    def test_group_budget(self, manny):
        counts = {}
        for j in manny.joints:
            counts[j.group] = counts.get(j.group, 0) + 1
        assert counts["trunk"] == 9
        assert counts["neck"] == 3
        assert counts["head"] == 2
        assert counts["arm"] == 18  # clavicle 2 + shoulder 3 + elbow 2 + wrist 2, both sides
        assert counts["hand"] == 8
        assert counts["leg"] == 16  # hip 3 + knee 1 + ankle 3 + toe 1, both sides

    def test_tree_ordering(self, manny):
        for i, j in enumerate(manny.joints):
            assert j.parent < i

    def test_effectors_present(self, manny):
        assert set(manny.effectors) >= {"left_hand", "right_hand"}

    def test_bad_ordering_rejected(self):
        joints = [
            TreeJoint("a", 1, (0, 0, 1), Pose.identity(), (-1, 1), "trunk"),
            TreeJoint("b", -1, (0, 0, 1), Pose.identity(), (-1, 1), "trunk"),
        ]
        with pytest.raises(ValueError, match="precede"):
            Mannequin(joints, {})


class TestFK:
    def test_zero_pose_upright(self, manny):
        frames = manny.joint_frames(np.zeros(56), Pose.identity())
        assert len(frames) == 56
        # hands hang at symmetric y offsets
        lh = manny.effector_pose("left_hand", np.zeros(56), Pose.identity())
        rh = manny.effector_pose("right_hand", np.zeros(56), Pose.identity())
        assert lh.position[1] == pytest.approx(-rh.position[1], abs=1e-9)
        np.testing.assert_allclose(lh.position[[0, 2]], rh.position[[0, 2]], atol=1e-9)

    def test_root_pose_carries(self, manny):
        base = manny.effector_pose("left_hand", np.zeros(56), Pose.identity())
        moved = manny.effector_pose("left_hand", np.zeros(56), Pose.translation((100, 0, 0)))
        np.testing.assert_allclose(moved.position, base.position + [100, 0, 0], atol=1e-9)

    def test_path_runs_root_to_hand(self, manny):
        path = manny.path_to("right_hand")
        assert path[0] == 0
        assert path == sorted(path)
        assert manny.effectors["right_hand"][0] == path[-1]


class TestSolve:
    def reachable_target(self, manny, dq=0.2):
        q_goal = np.zeros(56)
        for i in manny.path_to("right_hand"):
            lo, hi = manny.joints[i].limits
            q_goal[i] = min(hi, max(lo, dq))
        return manny.effector_pose("right_hand", q_goal, Pose.identity())

    def test_hand_target_converges(self, manny):
        target = self.reachable_target(manny)
        q = manny.solve({"right_hand": target}, np.zeros(56), Pose.identity())
        reached = manny.effector_pose("right_hand", q, Pose.identity())
        assert np.linalg.norm(reached.position - target.position) < 1.0

    def test_off_path_joints_bit_identical(self, manny):
        target = self.reachable_target(manny)
        q0 = np.full(56, 0.05)
        q = manny.solve({"right_hand": target}, q0, Pose.identity())
        on_path = set(manny.path_to("right_hand"))
        for i in range(56):
            if i not in on_path:
                assert q[i] == q0[i]  # bitwise

    def test_trunk_lock_bit_identical(self, manny):
        target = self.reachable_target(manny)
        q0 = np.full(56, 0.03)
        locked = set(manny.trunk_indices)
        q = manny.solve({"right_hand": target}, q0, Pose.identity(), locked=locked)
        for i in locked:
            assert q[i] == q0[i]
        reached = manny.effector_pose("right_hand", q, Pose.identity())
        assert np.linalg.norm(reached.position - target.position) < 1.0

    def test_both_hands(self, manny):
        tl = manny.effector_pose("left_hand", np.zeros(56), Pose.identity())
        tr = manny.effector_pose("right_hand", np.zeros(56), Pose.identity())
        tl = Pose(tl.position + [20, 0, 30], tl.orientation)
        tr = Pose(tr.position + [20, 0, 30], tr.orientation)
        q = manny.solve({"left_hand": tl, "right_hand": tr}, np.zeros(56), Pose.identity())
        for name, t in (("left_hand", tl), ("right_hand", tr)):
            reached = manny.effector_pose(name, q, Pose.identity())
            assert np.linalg.norm(reached.position - t.position) < 1.0

    def test_unreachable_raises(self, manny):
        with pytest.raises(SolveError, match="unreachable"):
            manny.solve(
                {"right_hand": Pose.translation((5000, 0, 0))}, np.zeros(56), Pose.identity()
            )

    def test_all_locked_raises(self, manny):
        target = self.reachable_target(manny)
        locked = set(manny.path_to("right_hand"))
        with pytest.raises(SolveError):
            manny.solve({"right_hand": target}, np.zeros(56), Pose.identity(), locked=locked)
