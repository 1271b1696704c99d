"""56-DOF kinematic-tree mannequin with hand-target solving.

The skeleton ships as a data file (data/mannequin56.json): a rooted tree of
single-axis revolute joints, several of which stack at one anatomical joint.
DOF budget: 3 spine segments x 3 (the lockable trunk, 9), neck 3 + head 2,
per arm clavicle 2 + shoulder 3 + elbow 2 + wrist 2 + simplified hand 4 (26),
per leg hip 3 + knee 1 + ankle 3 + toe 1 (16); total 56.

Hand targets are solved by damped least squares over the joints on the
root-to-hand path; locked or off-path joint values are never touched, so a
trunk lock leaves the trunk coordinates bit-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..geometry.pose import Pose
from .chains import OutOfWorkspace, wrap_angle

_ROT_WEIGHT_MM_PER_RAD = 100.0


class SolveError(ValueError):
    pass


@dataclass
class TreeJoint:
    name: str
    parent: int  # index into the joint list, -1 for the root pose
    axis: np.ndarray
    offset: Pose
    limits: tuple[float, float]
    group: str

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        self.axis = self.axis / np.linalg.norm(self.axis)


class Mannequin:
    def __init__(self, joints: list[TreeJoint], effectors: dict[str, tuple[int, Pose]]):
        self.joints = joints
        self.effectors = effectors  # name -> (joint index, tool offset)
        for i, j in enumerate(joints):
            if j.parent >= i:
                raise ValueError(f"joint {j.name}: parent must precede child")

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def trunk_indices(self) -> list[int]:
        return [i for i, j in enumerate(self.joints) if j.group == "trunk"]

    def joint_frames(self, q, root_pose: Pose) -> list[Pose]:
        frames: list[Pose] = []
        for i, joint in enumerate(self.joints):
            parent = root_pose if joint.parent < 0 else frames[joint.parent]
            frames.append(
                parent.compose(joint.offset).compose(Pose.from_axis_angle(joint.axis, q[i]))
            )
        return frames

    def effector_pose(self, name: str, q, root_pose: Pose) -> Pose:
        idx, tool = self.effectors[name]
        return self.joint_frames(q, root_pose)[idx].compose(tool)

    def path_to(self, name: str) -> list[int]:
        idx, _ = self.effectors[name]
        path = []
        while idx >= 0:
            path.append(idx)
            idx = self.joints[idx].parent
        return path[::-1]

    def solve(
        self,
        targets: dict[str, Pose],
        q0,
        root_pose: Pose,
        locked: set[int] | None = None,
        damping: float = 0.01,
        max_iters: int = 200,
        pos_tol_mm: float = 1.0,
        rot_tol_rad: float = 0.01,
    ) -> np.ndarray:
        """Drive the named effectors to their target poses.

        Only joints on an effector path and not in `locked` move; everything
        else is left bit-identical. Raises SolveError("target unreachable")
        without any change when the residual does not converge.
        """
        locked = locked or set()
        q = np.asarray(q0, dtype=float).copy()
        active = sorted(
            {i for name in targets for i in self.path_to(name)} - locked
        )
        if not active:
            raise SolveError("target unreachable")
        names = sorted(targets)
        lo = np.array([self.joints[i].limits[0] for i in active])
        hi = np.array([self.joints[i].limits[1] for i in active])

        for _ in range(max_iters):
            frames = self.joint_frames(q, root_pose)
            err_rows = []
            jac_rows = []
            worst_pos = 0.0
            worst_rot = 0.0
            for name in names:
                idx, tool = self.effectors[name]
                current = frames[idx].compose(tool)
                target = targets[name]
                pos_err = target.position - current.position
                rot_err = _rotation_vector(target.rotation_matrix() @ current.rotation_matrix().T)
                worst_pos = max(worst_pos, float(np.linalg.norm(pos_err)))
                worst_rot = max(worst_rot, float(np.linalg.norm(rot_err)))
                err_rows.append(np.concatenate([pos_err, _ROT_WEIGHT_MM_PER_RAD * rot_err]))
                path = set(self.path_to(name))
                block = np.zeros((6, len(active)))
                for col, ji in enumerate(active):
                    if ji not in path:
                        continue
                    joint = self.joints[ji]
                    parent = root_pose if joint.parent < 0 else frames[joint.parent]
                    jf = parent.compose(joint.offset)
                    axis_world = jf.rotate_vector(joint.axis)
                    block[:3, col] = np.cross(axis_world, current.position - jf.position)
                    block[3:, col] = _ROT_WEIGHT_MM_PER_RAD * axis_world
                jac_rows.append(block)
            if worst_pos < pos_tol_mm and worst_rot < rot_tol_rad:
                return q
            err = np.concatenate(err_rows)
            jac = np.vstack(jac_rows)
            jjt = jac @ jac.T + (damping ** 2) * np.eye(len(err))
            dq = jac.T @ np.linalg.solve(jjt, err)
            q[active] = np.clip(q[active] + dq, lo, hi)
        raise SolveError("target unreachable")

    @staticmethod
    def from_dict(d: dict) -> "Mannequin":
        joints = [
            TreeJoint(
                j["name"],
                int(j["parent"]),
                np.asarray(j["axis"], dtype=float),
                Pose.from_dict(j["offset"]),
                tuple(j["limits"]),
                j["group"],
            )
            for j in d["joints"]
        ]
        effectors = {
            name: (int(e["joint"]), Pose.from_dict(e["tool"])) for name, e in d["effectors"].items()
        }
        return Mannequin(joints, effectors)

    @staticmethod
    def load(path) -> "Mannequin":
        with open(Path(path), "r", encoding="utf-8") as fh:
            return Mannequin.from_dict(json.load(fh))


def _rotation_vector(r: np.ndarray) -> np.ndarray:
    angle = math.acos(min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0)))
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / (2.0 * math.sin(angle))
    return angle * axis


def default_mannequin() -> Mannequin:
    ref = resources.files("vworkcell.data").joinpath("mannequin56.json")
    return Mannequin.from_dict(json.loads(ref.read_text(encoding="utf-8")))
