"""Manipulable scene entities and their handle semantics.

A move produces a *candidate* configuration; committing it is the session's
job (stop-on-collision may reject it). Solids move rigidly about their pivot
frame; robots move rigidly in base mode or through the inverse model in tcpf
mode; the mannequin moves rigidly in whole-body mode or through the
damped-least-squares hand solve otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry.mesh import TriMesh
from ..geometry.pose import Pose
from .chains import IKSolveRecord, SerialChain, ik
from .mannequin import Mannequin

PIVOT_MODES = ("self_origin", "geometric_center", "user")


def _delta_about_point(pose: Pose, delta: Pose, point: np.ndarray) -> Pose:
    """Apply a world-frame delta to `pose`, rotating about `point`."""
    rot = Pose(np.zeros(3), delta.orientation)
    new_pos = point + delta.position + rot.rotate_vector(pose.position - point)
    return Pose(new_pos, rot.compose(pose).orientation)


@dataclass
class Candidate:
    """Uncommitted result of a move."""

    pose: Pose | None = None  # solid pose / robot base / mannequin root
    q: np.ndarray | None = None
    ik_record: IKSolveRecord | None = None


@dataclass
class SolidEntity:
    name: str
    mesh: TriMesh
    pose: Pose = field(default_factory=Pose.identity)
    pivot_mode: str = "self_origin"
    user_pivot: Pose = field(default_factory=Pose.identity)  # local frame

    kind = "solid"

    def __post_init__(self):
        if self.pivot_mode not in PIVOT_MODES:
            raise ValueError(f"unknown pivot mode {self.pivot_mode!r}")

    def local_pivot(self) -> Pose:
        if self.pivot_mode == "self_origin":
            return Pose.identity()
        if self.pivot_mode == "geometric_center":
            return Pose.translation(self.mesh.centroid())
        return self.user_pivot

    def pivot_frame(self) -> Pose:
        return self.pose.compose(self.local_pivot())

    def handle_pose(self) -> Pose:
        return self.pivot_frame()

    def candidate_move(self, delta: Pose, q_prev=None) -> Candidate:
        pivot_point = self.pivot_frame().position
        return Candidate(pose=_delta_about_point(self.pose, delta, pivot_point))

    def apply_candidate(self, c: Candidate) -> None:
        self.pose = c.pose

    def posed_meshes(self, c: Candidate | None = None) -> list[tuple[TriMesh, Pose]]:
        return [(self.mesh, c.pose if c is not None else self.pose)]


@dataclass
class RobotEntity:
    name: str
    chain: SerialChain
    q: np.ndarray
    base_pose: Pose = field(default_factory=Pose.identity)
    link_meshes: list[TriMesh | None] = field(default_factory=list)
    handle_mode: str = "tcpf"

    kind = "robot"

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.handle_mode not in ("base", "tcpf"):
            raise ValueError(f"unknown handle mode {self.handle_mode!r}")
        if not self.chain.within_limits(self.q):
            raise ValueError("initial configuration violates joint limits")

    def tcp_pose(self, q=None, base: Pose | None = None) -> Pose:
        return self.chain.fk(self.q if q is None else q, base if base is not None else self.base_pose)

    def handle_pose(self) -> Pose:
        return self.base_pose if self.handle_mode == "base" else self.tcp_pose()

    def candidate_move(self, delta: Pose, q_prev=None) -> Candidate:
        if self.handle_mode == "base":
            new_base = _delta_about_point(self.base_pose, delta, self.base_pose.position)
            return Candidate(pose=new_base, q=self.q)
        tcp = self.tcp_pose()
        target_world = _delta_about_point(tcp, delta, tcp.position)
        target_local = self.base_pose.inverse().compose(target_world)
        record = ik(self.chain, target_local, self.q if q_prev is None else q_prev)
        return Candidate(pose=self.base_pose, q=record.q, ik_record=record)

    def apply_candidate(self, c: Candidate) -> None:
        self.base_pose = c.pose
        self.q = c.q

    def link_frames(self, q=None, base: Pose | None = None) -> list[Pose]:
        return self.chain.joint_frames(
            self.q if q is None else q, base if base is not None else self.base_pose
        )[:-1]

    def posed_meshes(self, c: Candidate | None = None) -> list[tuple[TriMesh, Pose]]:
        q = self.q if c is None else c.q
        base = self.base_pose if c is None else c.pose
        frames = self.link_frames(q, base)
        return [
            (mesh, frame)
            for mesh, frame in zip(self.link_meshes, frames)
            if mesh is not None
        ]


@dataclass
class MannequinEntity:
    name: str
    model: Mannequin
    q: np.ndarray
    root_pose: Pose = field(default_factory=Pose.identity)
    handle_mode: str = "whole_body"
    trunk_locked: bool = False

    kind = "mannequin"

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if len(self.q) != self.model.dof:
            raise ValueError(f"expected {self.model.dof} joint values, got {len(self.q)}")
        if self.handle_mode not in ("whole_body", "left_hand", "right_hand", "both_hands"):
            raise ValueError(f"unknown handle mode {self.handle_mode!r}")

    def hand_pose(self, side: str) -> Pose:
        return self.model.effector_pose(side, self.q, self.root_pose)

    def handle_pose(self) -> Pose:
        if self.handle_mode == "whole_body":
            return self.root_pose
        side = "left_hand" if self.handle_mode in ("left_hand", "both_hands") else "right_hand"
        return self.hand_pose(side)

    def candidate_move(self, delta: Pose, q_prev=None) -> Candidate:
        if self.handle_mode == "whole_body":
            new_root = _delta_about_point(self.root_pose, delta, self.root_pose.position)
            return Candidate(pose=new_root, q=self.q)
        sides = {
            "left_hand": ["left_hand"],
            "right_hand": ["right_hand"],
            "both_hands": ["left_hand", "right_hand"],
        }[self.handle_mode]
        targets = {}
        for side in sides:
            hand = self.hand_pose(side)
            targets[side] = _delta_about_point(hand, delta, hand.position)
        locked = set(self.model.trunk_indices) if self.trunk_locked else set()
        q_new = self.model.solve(targets, self.q, self.root_pose, locked=locked)
        return Candidate(pose=self.root_pose, q=q_new)

    def apply_candidate(self, c: Candidate) -> None:
        self.root_pose = c.pose
        self.q = c.q

    def posed_meshes(self, c: Candidate | None = None) -> list[tuple[TriMesh, Pose]]:
        return []  # no collision shapes attached to the default skeleton


SceneEntity = SolidEntity | RobotEntity | MannequinEntity


def pivot_frame(solid: SolidEntity) -> Pose:
    return solid.pivot_frame()


def move_entity(entity: SceneEntity, delta: Pose, q_prev=None) -> Candidate:
    """Candidate configuration for a world-frame handle delta."""
    return entity.candidate_move(delta, q_prev)
