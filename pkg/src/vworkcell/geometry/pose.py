"""Rigid placements: position (mm) plus unit-quaternion orientation.

Quaternions are stored scalar-first (w, x, y, z) and renormalized after every
composition so drift never accumulates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_UNIT_TOL = 1e-9


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v' = q * (0, v) * conj(q), expanded to avoid building quaternions
    w, x, y, z = q
    u = np.array([x, y, z])
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


@dataclass
class Pose:
    """Position in mm and orientation as a unit quaternion (w, x, y, z)."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)
        n = np.linalg.norm(self.orientation)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} is not 1")
        self.orientation = self.orientation / n

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_axis_angle(axis, angle_rad: float, position=(0.0, 0.0, 0.0)) -> "Pose":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        half = 0.5 * angle_rad
        quat = np.concatenate(([math.cos(half)], math.sin(half) * axis))
        return Pose(np.asarray(position, dtype=float), quat)

    @staticmethod
    def translation(position) -> "Pose":
        return Pose(np.asarray(position, dtype=float))

    def compose(self, other: "Pose") -> "Pose":
        """Place `other` expressed through this frame."""
        quat = _quat_mul(self.orientation, other.orientation)
        quat = quat / np.linalg.norm(quat)
        pos = self.position + _quat_rotate(self.orientation, other.position)
        return Pose(pos, quat)

    def inverse(self) -> "Pose":
        conj = self.orientation * np.array([1.0, -1.0, -1.0, -1.0])
        return Pose(-_quat_rotate(conj, self.position), conj)

    def transform_point(self, point) -> np.ndarray:
        return self.position + _quat_rotate(self.orientation, np.asarray(point, dtype=float))

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation_matrix().T + self.position

    def rotate_vector(self, v) -> np.ndarray:
        return _quat_rotate(self.orientation, np.asarray(v, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.orientation
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous transform."""
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix()
        m[:3, 3] = self.position
        return m

    def approx_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        if np.max(np.abs(self.position - other.position)) > tol:
            return False
        # q and -q encode the same rotation
        d = min(
            np.max(np.abs(self.orientation - other.orientation)),
            np.max(np.abs(self.orientation + other.orientation)),
        )
        return d <= tol

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.orientation.copy())

    def to_dict(self) -> dict:
        return {
            "position_mm": [float(v) for v in self.position],
            "quat_wxyz": [float(v) for v in self.orientation],
        }

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose(np.asarray(d["position_mm"], dtype=float), np.asarray(d["quat_wxyz"], dtype=float))


def slerp(a: Pose, b: Pose, t: float) -> Pose:
    """Linear position / spherical-linear orientation interpolation."""
    qa, qb = a.orientation, np.array(b.orientation)
    dot = float(np.dot(qa, qb))
    if dot < 0.0:
        qb = -qb
        dot = -dot
    if dot > 1.0 - 1e-12:
        quat = qa + t * (qb - qa)
    else:
        theta = math.acos(min(dot, 1.0))
        s = math.sin(theta)
        quat = (math.sin((1.0 - t) * theta) / s) * qa + (math.sin(t * theta) / s) * qb
    quat = quat / np.linalg.norm(quat)
    return Pose(a.position + t * (b.position - a.position), quat)
