"""Serial kinematic chains: forward model, inverse model, branch selection.

Analytic inverse solvers enumerate every branch for three chain families
(planar 2R, planar 3R, 6R with a spherical wrist); any other chain falls back
to a damped-least-squares iteration that yields a single branch. Among valid
branches the one closest to the previous configuration (unweighted Euclidean
joint distance, ties to the lowest branch index) is chosen, which keeps the
joint trajectory continuous while the target moves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry.pose import Pose

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


class OutOfWorkspace(ValueError):
    pass


def wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


@dataclass
class Joint:
    type: str
    axis: np.ndarray
    origin: Pose = field(default_factory=Pose.identity)
    limits: tuple[float, float] = (-math.pi, math.pi)

    def __post_init__(self):
        if self.type not in (REVOLUTE, PRISMATIC):
            raise ValueError(f"unknown joint type {self.type!r}")
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(self.axis)
        if n <= 0:
            raise ValueError("joint axis must be nonzero")
        self.axis = self.axis / n
        if self.limits[0] > self.limits[1]:
            raise ValueError("joint limits reversed")

    def motion(self, q: float) -> Pose:
        if self.type == REVOLUTE:
            return Pose.from_axis_angle(self.axis, q)
        return Pose.translation(self.axis * q)


@dataclass
class SerialChain:
    joints: list[Joint]
    tool: Pose = field(default_factory=Pose.identity)
    family: str = "generic"
    name: str = "chain"

    @property
    def dof(self) -> int:
        return len(self.joints)

    def limits_lo(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    def limits_hi(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def within_limits(self, q, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.limits_lo() - tol) and np.all(q <= self.limits_hi() + tol))

    def joint_frames(self, q, base: Pose | None = None) -> list[Pose]:
        """Frame after each joint's motion, plus the tool frame last."""
        t = base.copy() if base is not None else Pose.identity()
        frames = []
        for joint, qi in zip(self.joints, q):
            t = t.compose(joint.origin).compose(joint.motion(qi))
            frames.append(t)
        frames.append(t.compose(self.tool))
        return frames

    def fk(self, q, base: Pose | None = None) -> Pose:
        return self.joint_frames(q, base)[-1]

    @staticmethod
    def from_dict(d: dict) -> "SerialChain":
        joints = [
            Joint(
                j["type"],
                np.asarray(j["axis"], dtype=float),
                Pose.from_dict(j["origin"]) if "origin" in j else Pose.identity(),
                tuple(j.get("limits", (-math.pi, math.pi))),
            )
            for j in d["joints"]
        ]
        tool = Pose.from_dict(d["tool"]) if "tool" in d else Pose.identity()
        return SerialChain(joints, tool, d.get("family", "generic"), d.get("name", "chain"))

    @staticmethod
    def load(path) -> "SerialChain":
        with open(Path(path), "r", encoding="utf-8") as fh:
            return SerialChain.from_dict(json.load(fh))


def fk(chain: SerialChain, q, base: Pose | None = None) -> Pose:
    return chain.fk(q, base)


# ---------------------------------------------------------------------------
# canonical chain builders
# ---------------------------------------------------------------------------

def planar_2r_chain(l1: float = 1.0, l2: float = 1.0, limits=None) -> SerialChain:
    """Two revolute Z joints in the XY plane, links along local X."""
    limits = limits or [(-math.pi, math.pi)] * 2
    z = np.array([0.0, 0.0, 1.0])
    joints = [
        Joint(REVOLUTE, z, Pose.identity(), limits[0]),
        Joint(REVOLUTE, z, Pose.translation((l1, 0.0, 0.0)), limits[1]),
    ]
    return SerialChain(joints, Pose.translation((l2, 0.0, 0.0)), family="planar2r", name="planar2r")


def planar_3r_chain(l1: float = 1.0, l2: float = 1.0, l3: float = 0.5, limits=None) -> SerialChain:
    limits = limits or [(-math.pi, math.pi)] * 3
    z = np.array([0.0, 0.0, 1.0])
    joints = [
        Joint(REVOLUTE, z, Pose.identity(), limits[0]),
        Joint(REVOLUTE, z, Pose.translation((l1, 0.0, 0.0)), limits[1]),
        Joint(REVOLUTE, z, Pose.translation((l2, 0.0, 0.0)), limits[2]),
    ]
    return SerialChain(joints, Pose.translation((l3, 0.0, 0.0)), family="planar3r", name="planar3r")


def spherical_6r_chain(
    d1: float = 300.0, a2: float = 400.0, d4: float = 350.0, d6: float = 80.0, limits=None
) -> SerialChain:
    """Anthropomorphic arm (waist Z, shoulder Y, elbow Y) + ZYZ spherical wrist.

    At q = 0 the arm points straight up; the tool tip sits at
    (0, 0, d1 + a2 + d4 + d6).
    """
    limits = limits or [(-math.pi, math.pi)] * 6
    x, y, z = np.eye(3)
    joints = [
        Joint(REVOLUTE, z, Pose.identity(), limits[0]),
        Joint(REVOLUTE, y, Pose.translation((0.0, 0.0, d1)), limits[1]),
        Joint(REVOLUTE, y, Pose.translation((0.0, 0.0, a2)), limits[2]),
        Joint(REVOLUTE, z, Pose.translation((0.0, 0.0, d4)), limits[3]),
        Joint(REVOLUTE, y, Pose.identity(), limits[4]),
        Joint(REVOLUTE, z, Pose.identity(), limits[5]),
    ]
    return SerialChain(joints, Pose.translation((0.0, 0.0, d6)), family="spherical6r", name="spherical6r")


# ---------------------------------------------------------------------------
# analytic branch enumeration
# ---------------------------------------------------------------------------

def _planar_2r_branches(l1: float, l2: float, x: float, y: float) -> list[tuple[float, float]]:
    r2 = x * x + y * y
    c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if c2 > 1.0 + 1e-9 or c2 < -1.0 - 1e-9:
        raise OutOfWorkspace("out of workspace")
    c2 = min(1.0, max(-1.0, c2))
    s2 = math.sqrt(max(0.0, 1.0 - c2 * c2))
    branches = []
    for sign in (1.0, -1.0):
        q2 = math.atan2(sign * s2, c2)
        q1 = math.atan2(y, x) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2))
        branches.append((wrap_angle(q1), wrap_angle(q2)))
    if abs(s2) < 1e-9:
        branches = branches[:1]  # boundary singularity: both branches coincide
    return branches


def _link_lengths_2r(chain: SerialChain) -> tuple[float, float]:
    return float(np.linalg.norm(chain.joints[1].origin.position)), float(
        np.linalg.norm(chain.tool.position)
    )


def _solve_planar2r(chain: SerialChain, target: Pose) -> list[np.ndarray]:
    l1, l2 = _link_lengths_2r(chain)
    x, y = float(target.position[0]), float(target.position[1])
    return [np.array(b) for b in _planar_2r_branches(l1, l2, x, y)]


def _solve_planar3r(chain: SerialChain, target: Pose) -> list[np.ndarray]:
    l1 = float(np.linalg.norm(chain.joints[1].origin.position))
    l2 = float(np.linalg.norm(chain.joints[2].origin.position))
    l3 = float(np.linalg.norm(chain.tool.position))
    x, y = float(target.position[0]), float(target.position[1])
    rot = target.rotation_matrix()
    phi = math.atan2(rot[1, 0], rot[0, 0])
    wx = x - l3 * math.cos(phi)
    wy = y - l3 * math.sin(phi)
    out = []
    for q1, q2 in _planar_2r_branches(l1, l2, wx, wy):
        out.append(np.array([q1, q2, wrap_angle(phi - q1 - q2)]))
    return out


def _solve_spherical6r(chain: SerialChain, target: Pose) -> list[np.ndarray]:
    d1 = float(chain.joints[1].origin.position[2])
    a2 = float(chain.joints[2].origin.position[2])
    d4 = float(chain.joints[3].origin.position[2])
    d6 = float(chain.tool.position[2])
    rot = target.rotation_matrix()
    wrist = target.position - rot @ np.array([0.0, 0.0, d6])
    rho = math.hypot(wrist[0], wrist[1])
    zr = wrist[2] - d1
    theta = math.atan2(wrist[1], wrist[0]) if rho > 1e-12 else 0.0
    candidates = []
    for q1, xr in ((theta, rho), (wrap_angle(theta + math.pi), -rho)):
        # planar elbow in the (x', z) half-plane, angles measured from +Z
        c3 = (xr * xr + zr * zr - a2 * a2 - d4 * d4) / (2.0 * a2 * d4)
        if c3 > 1.0 + 1e-9 or c3 < -1.0 - 1e-9:
            continue
        c3 = min(1.0, max(-1.0, c3))
        s3 = math.sqrt(max(0.0, 1.0 - c3 * c3))
        for sign in (1.0, -1.0):
            q3 = math.atan2(sign * s3, c3)
            q2 = math.atan2(xr, zr) - math.atan2(d4 * math.sin(q3), a2 + d4 * math.cos(q3))
            r03 = (
                Pose.from_axis_angle((0, 0, 1), q1)
                .compose(Pose.from_axis_angle((0, 1, 0), q2))
                .compose(Pose.from_axis_angle((0, 1, 0), q3))
                .rotation_matrix()
            )
            r36 = r03.T @ rot
            # ZYZ Euler decomposition, two wrist branches
            sy = math.hypot(r36[0, 2], r36[1, 2])
            if sy > 1e-9:
                for s5 in (1.0, -1.0):
                    q5 = math.atan2(s5 * sy, r36[2, 2])
                    q4 = math.atan2(r36[1, 2] * s5, r36[0, 2] * s5)
                    q6 = math.atan2(r36[2, 1] * s5, -r36[2, 0] * s5)
                    candidates.append(
                        np.array([wrap_angle(a) for a in (q1, q2, q3, q4, q5, q6)])
                    )
            else:
                q5 = 0.0 if r36[2, 2] > 0 else math.pi
                q4 = 0.0
                q6 = math.atan2(r36[1, 0], r36[0, 0]) if r36[2, 2] > 0 else math.atan2(r36[1, 0], -r36[0, 0])
                candidates.append(np.array([wrap_angle(a) for a in (q1, q2, q3, q4, q5, q6)]))
    # keep only candidates that actually reproduce the target
    out = []
    for q in candidates:
        f = chain.fk(q)
        if np.max(np.abs(f.position - target.position)) < 1e-6 and f.approx_equal(
            Pose(target.position, target.orientation), 1e-6
        ):
            out.append(q)
    if not out:
        raise OutOfWorkspace("out of workspace")
    return out


# ---------------------------------------------------------------------------
# damped-least-squares fallback
# ---------------------------------------------------------------------------

def _pose_error(current: Pose, target: Pose) -> np.ndarray:
    pos_err = target.position - current.position
    r_err = target.rotation_matrix() @ current.rotation_matrix().T
    # rotation vector of the residual rotation
    angle = math.acos(min(1.0, max(-1.0, (np.trace(r_err) - 1.0) / 2.0)))
    if angle < 1e-12:
        rot_err = np.zeros(3)
    else:
        axis = np.array(
            [r_err[2, 1] - r_err[1, 2], r_err[0, 2] - r_err[2, 0], r_err[1, 0] - r_err[0, 1]]
        ) / (2.0 * math.sin(angle))
        rot_err = angle * axis
    return np.concatenate([pos_err, rot_err])


def chain_jacobian(chain: SerialChain, q, base: Pose | None = None) -> np.ndarray:
    """6 x n spatial Jacobian of the tool frame (position rows first)."""
    frames = chain.joint_frames(q, base)
    tip = frames[-1].position
    jac = np.zeros((6, chain.dof))
    t = base.copy() if base is not None else Pose.identity()
    for i, joint in enumerate(chain.joints):
        joint_frame = t.compose(joint.origin)
        axis_world = joint_frame.rotate_vector(joint.axis)
        if joint.type == REVOLUTE:
            jac[:3, i] = np.cross(axis_world, tip - joint_frame.position)
            jac[3:, i] = axis_world
        else:
            jac[:3, i] = axis_world
        t = frames[i]
    return jac


def dls_ik(
    chain: SerialChain,
    target: Pose,
    q0,
    damping: float = 0.01,
    max_iters: int = 200,
    pos_tol: float = 1e-4,
    rot_tol: float = 1e-6,
) -> np.ndarray:
    q = np.asarray(q0, dtype=float).copy()
    lo, hi = chain.limits_lo(), chain.limits_hi()
    for _ in range(max_iters):
        err = _pose_error(chain.fk(q), target)
        if np.linalg.norm(err[:3]) < pos_tol and np.linalg.norm(err[3:]) < rot_tol:
            return q
        jac = chain_jacobian(chain, q)
        jjt = jac @ jac.T + (damping ** 2) * np.eye(6)
        q = np.clip(q + jac.T @ np.linalg.solve(jjt, err), lo, hi)
    err = _pose_error(chain.fk(q), target)
    if np.linalg.norm(err[:3]) < pos_tol and np.linalg.norm(err[3:]) < rot_tol:
        return q
    raise OutOfWorkspace("out of workspace")


# ---------------------------------------------------------------------------
# branch selection
# ---------------------------------------------------------------------------

@dataclass
class IKSolveRecord:
    solutions: list[np.ndarray]
    chosen: int
    q_prev: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return self.solutions[self.chosen]


_ANALYTIC = {
    "planar2r": _solve_planar2r,
    "planar3r": _solve_planar3r,
    "spherical6r": _solve_spherical6r,
}


def ik(chain: SerialChain, target: Pose, q_prev) -> IKSolveRecord:
    """All IK branches with the continuity choice: nearest to q_prev wins."""
    q_prev = np.asarray(q_prev, dtype=float)
    solver = _ANALYTIC.get(chain.family)
    if solver is not None:
        solutions = solver(chain, target)
        solutions = [q for q in solutions if chain.within_limits(q)]
        if not solutions:
            raise OutOfWorkspace("out of workspace")
    else:
        solutions = [dls_ik(chain, target, q_prev)]
    dists = [float(np.linalg.norm(q - q_prev)) for q in solutions]
    chosen = 0
    for i in range(1, len(dists)):
        if dists[i] < dists[chosen]:  # strict: ties keep the lowest branch index
            chosen = i
    return IKSolveRecord(solutions, chosen, q_prev)
