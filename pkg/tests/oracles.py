"""Independent oracles used by the tests.

These deliberately avoid the library's own code paths: pose composition goes
through 4x4 homogeneous matrices, orientation interpolation through scipy,
triangle distances through dense surface sampling, and mesh distances through
the exhaustive triangle-pair enumeration.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.transform import Rotation, Slerp

from vworkcell.geometry.mesh import TriMesh
from vworkcell.geometry.pose import Pose


def pose_to_matrix(p: Pose) -> np.ndarray:
    m = np.eye(4)
    w, x, y, z = p.orientation
    m[:3, :3] = Rotation.from_quat([x, y, z, w]).as_matrix()
    m[:3, 3] = p.position
    return m


def matrix_to_pose(m: np.ndarray) -> Pose:
    x, y, z, w = Rotation.from_matrix(m[:3, :3]).as_quat()
    return Pose(m[:3, 3], np.array([w, x, y, z]))


def compose_oracle(a: Pose, b: Pose) -> Pose:
    return matrix_to_pose(pose_to_matrix(a) @ pose_to_matrix(b))


def slerp_oracle(a: Pose, b: Pose, t: float) -> Pose:
    rots = Rotation.from_quat(
        [[*a.orientation[1:], a.orientation[0]], [*b.orientation[1:], b.orientation[0]]]
    )
    r = Slerp([0.0, 1.0], rots)(t)
    x, y, z, w = r.as_quat()
    return Pose(a.position + t * (b.position - a.position), np.array([w, x, y, z]))


def sample_triangle(tri: np.ndarray, divisions: int) -> np.ndarray:
    """Dense barycentric grid of points on one triangle."""
    pts = []
    for i in range(divisions + 1):
        for j in range(divisions + 1 - i):
            u = i / divisions
            v = j / divisions
            pts.append((1 - u - v) * tri[0] + u * tri[1] + v * tri[2])
    return np.array(pts)


def sampled_triangle_distance(tri_a: np.ndarray, tri_b: np.ndarray, divisions: int = 40) -> float:
    """Upper bound on the triangle-pair distance via dense point sampling."""
    pa = sample_triangle(tri_a, divisions)
    pb = sample_triangle(tri_b, divisions)
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min()))


def sphere_hull_mesh(rng: np.random.Generator, n_points: int, radius: float = 50.0) -> TriMesh:
    """Random convex mesh with ~2n-4 triangles (all points on the hull)."""
    pts = rng.normal(size=(n_points, 3))
    pts = radius * pts / np.linalg.norm(pts, axis=1, keepdims=True)
    hull = ConvexHull(pts)
    return TriMesh(pts, hull.simplices).validate()


def random_pose(rng: np.random.Generator, span_mm: float = 100.0) -> Pose:
    quat = rng.normal(size=4)
    quat /= np.linalg.norm(quat)
    return Pose(rng.uniform(-span_mm, span_mm, size=3), quat)
