"""The slow scene loop: poll stylus, map motion, move, collide, commit or reject.

Each step pulls the latest stylus sample over the protocol, turns clutch-
relative device motion into a world-frame handle delta, produces a candidate
configuration for the selected entity and tests it against the active
collision groups. A candidate with witness distance zero is rejected
(stop-on-collision: the previous pose is retained) and a force model built
from the last pre-contact witness is pushed to the servo; a candidate inside
the safety margin commits but still sends a graded pre-contact model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import StylusState
from .geometry.distance import Contact, Witness, closest_pair, contact_estimate
from .geometry.mesh import MeshError, TriMesh, load_mesh
from .geometry.pose import Pose
from .kinematics.chains import (
    OutOfWorkspace,
    SerialChain,
    planar_2r_chain,
    planar_3r_chain,
    spherical_6r_chain,
)
from .kinematics.entities import MannequinEntity, RobotEntity, SceneEntity, SolidEntity
from .kinematics.mannequin import SolveError, default_mannequin
from .mapping import ClutchState, MappingConfig, Viewport, apply_clutch, committed_pose, frame_rotation
from .protocol import ProtocolTimeout
from .servo import ConstraintModel

DEFAULT_SAFETY_MARGIN_MM = 5.0


class SceneError(ValueError):
    pass


@dataclass
class ForceLawConfig:
    law_class: str = "variable"
    f0_n: float = 2.0
    k_n_per_mm: float = 0.4
    mass_factor: float = 1.0


@dataclass
class SessionConfig:
    mapping: MappingConfig = field(default_factory=MappingConfig)
    safety_margin_mm: float = DEFAULT_SAFETY_MARGIN_MM
    force_law: ForceLawConfig = field(default_factory=ForceLawConfig)

    @staticmethod
    def from_dict(d: dict) -> "SessionConfig":
        mapping_kwargs = {}
        if "scale_factors" in d:
            mapping_kwargs["scale_factors"] = {k: float(v) for k, v in d["scale_factors"].items()}
        if "default_level" in d:
            mapping_kwargs["scale_level"] = d["default_level"]
        if "frame_mode" in d:
            mapping_kwargs["frame_mode"] = d["frame_mode"]
        if "user_frame" in d:
            mapping_kwargs["user_frame"] = Pose.from_dict(d["user_frame"])
        if "viewport" in d:
            mapping_kwargs["viewport"] = Viewport(
                Pose.from_dict(d["viewport"]["camera_pose"])
                if "camera_pose" in d["viewport"]
                else Pose.identity(),
                float(d["viewport"].get("world_span_mm", 1600.0)),
            )
        fl = d.get("force_law", {})
        return SessionConfig(
            mapping=MappingConfig(**mapping_kwargs),
            safety_margin_mm=float(d.get("safety_margin_mm", DEFAULT_SAFETY_MARGIN_MM)),
            force_law=ForceLawConfig(
                law_class=fl.get("law_class", "variable"),
                f0_n=float(fl.get("f0_n", 2.0)),
                k_n_per_mm=float(fl.get("k_n_per_mm", 0.4)),
                mass_factor=float(fl.get("mass_factor", 1.0)),
            ),
        )


@dataclass
class Scene:
    entities: dict[str, SceneEntity]
    collision_pairs: list[tuple[set[str], set[str]]] = field(default_factory=list)
    selected: str | None = None
    config: SessionConfig = field(default_factory=SessionConfig)

    def __post_init__(self):
        self.validate_pairs(self.collision_pairs)
        if self.selected is not None and self.selected not in self.entities:
            raise SceneError(f"selected entity {self.selected!r} does not exist")

    def validate_pairs(self, pairs) -> None:
        for ga, gb in pairs:
            for name in set(ga) | set(gb):
                if name not in self.entities:
                    raise SceneError(f"collision group references unknown entity {name!r}")

    def entity_state(self, name: str) -> dict:
        e = self.entities[name]
        state: dict = {"kind": e.kind}
        if e.kind == "solid":
            state["pose"] = e.pose.to_dict()
        elif e.kind == "robot":
            state["base_pose"] = e.base_pose.to_dict()
            state["q"] = [float(v) for v in e.q]
        else:
            state["root_pose"] = e.root_pose.to_dict()
            state["q"] = [float(v) for v in e.q]
        return state

    def apply_entity_state(self, name: str, state: dict) -> None:
        e = self.entities[name]
        if e.kind == "solid":
            e.pose = Pose.from_dict(state["pose"])
        elif e.kind == "robot":
            e.base_pose = Pose.from_dict(state["base_pose"])
            e.q = np.asarray(state["q"], dtype=float)
        else:
            e.root_pose = Pose.from_dict(state["root_pose"])
            e.q = np.asarray(state["q"], dtype=float)


# ---------------------------------------------------------------------------
# trajectory recording
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    waypoints: list[tuple[Pose, float]] = field(default_factory=list)
    mode: str = "manual"  # manual | auto_time | auto_distance
    interval_ms: float = 500.0
    interval_mm: float = 10.0


class TrajectoryRecorder:
    """Waypoints at time or path-length intervals; never smoothed."""

    def __init__(self, mode: str = "manual", interval_ms: float = 500.0, interval_mm: float = 10.0):
        if mode not in ("manual", "auto_time", "auto_distance"):
            raise ValueError(f"unknown recording mode {mode!r}")
        self.trajectory = Trajectory([], mode, interval_ms, interval_mm)
        self._last_pose: Pose | None = None
        self._path_since_last = 0.0

    def record_update(self, pose: Pose, t_ms: float, manual_event: bool = False) -> bool:
        traj = self.trajectory
        appended = False
        if self._last_pose is not None:
            self._path_since_last += float(
                np.linalg.norm(pose.position - self._last_pose.position)
            )
        self._last_pose = pose.copy()
        if traj.mode == "manual":
            appended = manual_event
        elif traj.mode == "auto_time":
            appended = not traj.waypoints or t_ms - traj.waypoints[-1][1] >= traj.interval_ms
        else:  # auto_distance
            appended = not traj.waypoints or self._path_since_last >= traj.interval_mm
        if appended:
            traj.waypoints.append((pose.copy(), t_ms))
            self._path_since_last = 0.0
        return appended


def save_trajectory(traj: Trajectory, path) -> None:
    data = {
        "mode": traj.mode,
        "interval_ms": traj.interval_ms,
        "interval_mm": traj.interval_mm,
        "waypoints": [
            {"t_ms": t, **pose.to_dict()} for pose, t in traj.waypoints
        ],
    }
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)


def load_trajectory(path) -> Trajectory:
    with open(Path(path), "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return Trajectory(
        [(Pose.from_dict(w), float(w["t_ms"])) for w in data["waypoints"]],
        data.get("mode", "manual"),
        float(data.get("interval_ms", 500.0)),
        float(data.get("interval_mm", 10.0)),
    )


# ---------------------------------------------------------------------------
# scene files
# ---------------------------------------------------------------------------

_BUILTIN_CHAINS = {
    "planar2r": planar_2r_chain,
    "planar3r": planar_3r_chain,
    "spherical6r": spherical_6r_chain,
}


def _load_mesh_ref(ref, base_dir: Path) -> TriMesh:
    if isinstance(ref, dict) and "box" in ref:
        return TriMesh.box(*ref["box"], origin=ref.get("origin", "center"))
    path = base_dir / ref
    if not path.exists():
        raise SceneError(f"mesh file not found: {path}")
    try:
        return load_mesh(path)
    except MeshError as exc:
        raise SceneError(str(exc)) from exc


def _load_chain_ref(ref, base_dir: Path) -> SerialChain:
    if isinstance(ref, dict) and "builtin" in ref:
        builder = _BUILTIN_CHAINS.get(ref["builtin"])
        if builder is None:
            raise SceneError(f"unknown builtin chain {ref['builtin']!r}")
        return builder(**ref.get("params", {}))
    path = base_dir / ref
    if not path.exists():
        raise SceneError(f"kinematics file not found: {path}")
    return SerialChain.load(path)


def load_scene(path) -> Scene:
    path = Path(path)
    if not path.exists():
        raise SceneError(f"scene file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    base_dir = path.parent
    entities: dict[str, SceneEntity] = {}
    for i, e in enumerate(raw.get("entities", [])):
        try:
            name = e["name"]
            kind = e["kind"]
        except KeyError as exc:
            raise SceneError(f"entity #{i}: missing field {exc}") from exc
        if name in entities:
            raise SceneError(f"duplicate entity name {name!r}")
        pose = Pose.from_dict(e["pose"]) if "pose" in e else Pose.identity()
        if kind == "solid":
            entities[name] = SolidEntity(
                name,
                _load_mesh_ref(e["mesh"], base_dir),
                pose,
                e.get("pivot", "self_origin"),
                Pose.from_dict(e["user_pivot"]) if "user_pivot" in e else Pose.identity(),
            )
        elif kind == "robot":
            chain = _load_chain_ref(e["kinematics"], base_dir)
            link_meshes = [
                _load_mesh_ref(m, base_dir) if m is not None else None
                for m in e.get("link_meshes", [None] * chain.dof)
            ]
            entities[name] = RobotEntity(
                name,
                chain,
                np.asarray(e.get("q", [0.0] * chain.dof), dtype=float),
                pose,
                link_meshes,
                e.get("handle_mode", "tcpf"),
            )
        elif kind == "mannequin":
            model = default_mannequin()
            entities[name] = MannequinEntity(
                name,
                model,
                np.asarray(e.get("q", [0.0] * model.dof), dtype=float),
                pose,
                e.get("handle_mode", "whole_body"),
                bool(e.get("trunk_locked", False)),
            )
        else:
            raise SceneError(f"entity {name!r}: unknown kind {kind!r}")
    pairs = [
        (set(ga), set(gb)) for ga, gb in raw.get("collision_pairs", [])
    ]
    config = SessionConfig.from_dict(raw.get("config", {}))
    return Scene(entities, pairs, raw.get("config", {}).get("selected"), config)


# ---------------------------------------------------------------------------
# the session loop
# ---------------------------------------------------------------------------

@dataclass
class StepReport:
    t_ms: float
    polled: bool = False
    engaged: bool = False
    committed: bool = False
    rejected: bool = False
    aborted: bool = False
    out_of_workspace: bool = False
    min_distance: float | None = None
    queries: int = 0
    force_model: dict | None = None
    recorded: bool = False

    def to_dict(self) -> dict:
        return {
            "t_ms": self.t_ms,
            "polled": self.polled,
            "engaged": self.engaged,
            "committed": self.committed,
            "rejected": self.rejected,
            "aborted": self.aborted,
            "out_of_workspace": self.out_of_workspace,
            "min_distance": self.min_distance,
            "queries": self.queries,
            "force_model": self.force_model,
            "recorded": self.recorded,
        }


class Session:
    """Owns the scene and all its mutation; talks to the servo via `client`."""

    def __init__(self, scene: Scene, client, pump=None, state_log_path=None):
        self.scene = scene
        self.client = client
        self.pump = pump  # lockstep hook: advances the servo/server in-process
        self.clutch = ClutchState()
        self.recorder: TrajectoryRecorder | None = None
        self.query_count = 0
        self.last_witness: Witness | None = None
        self.last_stylus: StylusState | None = None
        self._sent_model: dict | None = None
        self.state_log: list[dict] = []
        self._state_log_fh = open(state_log_path, "w", encoding="utf-8") if state_log_path else None

    # -- selection / clutch -------------------------------------------------
    @property
    def selected_entity(self) -> SceneEntity | None:
        if self.scene.selected is None:
            return None
        return self.scene.entities[self.scene.selected]

    def select(self, name: str | None) -> None:
        if name is not None and name not in self.scene.entities:
            raise SceneError(f"unknown entity {name!r}")
        self.disengage()
        self.scene.selected = name

    def engage(self) -> None:
        entity = self.selected_entity
        if entity is None:
            raise SceneError("no entity selected")
        if self.last_stylus is None:
            self._poll()
        if self.last_stylus is None:
            raise SceneError("no stylus sample available")
        self.clutch.engage(self.last_stylus.pose, entity.handle_pose())

    def disengage(self) -> None:
        self.clutch.disengage()

    def set_collision_pairs(self, pairs) -> None:
        pairs = [(set(ga), set(gb)) for ga, gb in pairs]
        self.scene.validate_pairs(pairs)
        self.scene.collision_pairs = pairs

    def start_recording(self, mode: str, interval_ms: float = 500.0, interval_mm: float = 10.0) -> None:
        self.recorder = TrajectoryRecorder(mode, interval_ms, interval_mm)

    def stop_recording(self) -> Trajectory | None:
        traj = self.recorder.trajectory if self.recorder else None
        self.recorder = None
        return traj

    # -- collision ----------------------------------------------------------
    def _pair_meshes(self, names: set[str], candidate, selected_name):
        out = []
        for name in sorted(names):
            entity = self.scene.entities[name]
            c = candidate if name == selected_name else None
            out.extend(entity.posed_meshes(c))
        return out

    def min_witness(self, candidate=None) -> Witness | None:
        """Minimum witness over active collision pairs, candidate-aware."""
        selected_name = self.scene.selected
        best: Witness | None = None
        for ga, gb in self.scene.collision_pairs:
            if selected_name in gb and selected_name not in ga:
                ga, gb = gb, ga  # keep the moved entity on the A side (normal convention)
            for mesh_a, pose_a in self._pair_meshes(ga, candidate, selected_name):
                for mesh_b, pose_b in self._pair_meshes(gb, candidate, selected_name):
                    w = closest_pair(mesh_a, pose_a, mesh_b, pose_b)
                    self.query_count += 1
                    if best is None or w.distance < best.distance:
                        best = w
        return best

    # -- force model handoff -------------------------------------------------
    def _device_model(self, contact: Contact | None) -> dict:
        cfg = self.scene.config
        if contact is None:
            model = ConstraintModel.inactive()
        else:
            # map world contact into the device frame of the current stylus
            rot = frame_rotation(cfg.mapping)
            normal_dev = rot.inverse().rotate_vector(contact.normal)
            factor = cfg.mapping.translation_factor()
            depth_dev = contact.depth / factor
            pos = self.last_stylus.pose.position
            model = ConstraintModel(
                active=True,
                anchor_mm=pos + depth_dev * normal_dev,
                normal=normal_dev,
                law_class=cfg.force_law.law_class,
                f0_n=cfg.force_law.f0_n,
                k_n_per_mm=cfg.force_law.k_n_per_mm,
                mass_factor=cfg.force_law.mass_factor,
            )
        return model.to_dict()

    def _send_model(self, payload: dict) -> None:
        if payload != self._sent_model:
            self.client.set_force_model(payload, **self._req_kwargs())
            self._sent_model = payload

    def _req_kwargs(self) -> dict:
        return {"pump": self.pump} if self.pump is not None else {}

    def _poll(self) -> StylusState | None:
        payload = self.client.get_pose(**self._req_kwargs())
        if not payload:
            return None
        self.last_stylus = StylusState.from_dict(payload)
        return self.last_stylus

    # -- the step -----------------------------------------------------------
    def step(self, t_ms: float, manual_record_event: bool = False) -> StepReport:
        report = StepReport(t_ms=t_ms)
        prev_stylus = self.last_stylus
        try:
            stylus = self._poll()
        except ProtocolTimeout:
            report.aborted = True
            return report
        if stylus is None:
            return report
        report.polled = True
        entity = self.selected_entity
        delta = apply_clutch(stylus, self.clutch, self.scene.config.mapping)
        if entity is None or delta is None:
            self._log_step(report, None)
            return report
        report.engaged = True

        # desired handle pose from the clutch anchors; step delta from current
        desired = committed_pose(self.clutch, delta)
        current = entity.handle_pose()
        step_delta = Pose(
            desired.position - current.position,
            Pose(np.zeros(3), desired.orientation)
            .compose(Pose(np.zeros(3), current.orientation).inverse())
            .orientation,
        )
        try:
            candidate = entity.candidate_move(step_delta)
        except (OutOfWorkspace, SolveError):
            report.out_of_workspace = True
            report.rejected = True
            contact = self._resistance_contact(prev_stylus, stylus)
            model = self._device_model(contact)
            self._send_model(model)
            report.force_model = model
            self._log_step(report, None)
            return report

        witness = self.min_witness(candidate)
        report.queries = self.query_count
        margin = self.scene.config.safety_margin_mm
        if witness is not None:
            report.min_distance = witness.distance
        if witness is not None and witness.distance == 0.0:
            # stop on collision: previous pose retained
            report.rejected = True
            contact = self._collision_contact(prev_stylus, stylus, margin)
            model = self._device_model(contact)
            self._send_model(model)
            report.force_model = model
            self._log_step(report, None)
            return report

        entity.apply_candidate(candidate)
        report.committed = True
        if witness is not None and witness.distance < margin:
            contact = contact_estimate(
                witness, margin, self._fallback_normal(prev_stylus, stylus)
            )
            self.last_witness = witness
            model = self._device_model(contact)
        else:
            if witness is not None:
                self.last_witness = witness
            model = self._device_model(None)
        self._send_model(model)
        report.force_model = model
        if self.recorder is not None:
            report.recorded = self.recorder.record_update(
                entity.handle_pose(), t_ms, manual_record_event
            )
        self._log_step(report, entity)
        return report

    def _fallback_normal(self, prev: StylusState | None, cur: StylusState) -> np.ndarray:
        if prev is not None:
            motion = cur.pose.position - prev.pose.position
            n = np.linalg.norm(motion)
            if n > 1e-12:
                world = frame_rotation(self.scene.config.mapping).rotate_vector(-motion / n)
                return world
        return np.array([0.0, 0.0, 1.0])

    def _collision_contact(self, prev, cur, margin: float) -> Contact:
        fallback = self._fallback_normal(prev, cur)
        if self.last_witness is not None and self.last_witness.distance > 0.0:
            contact = contact_estimate(self.last_witness, margin, fallback)
            if contact is not None:
                return Contact(contact.point, contact.normal, margin)
        return Contact(cur.pose.position.copy(), fallback, margin)

    def _resistance_contact(self, prev, cur) -> Contact:
        # workspace limits act like an obstacle: resist along the attempted motion
        margin = self.scene.config.safety_margin_mm
        return Contact(cur.pose.position.copy(), self._fallback_normal(prev, cur), margin)

    def _log_step(self, report: StepReport, entity) -> None:
        entry = report.to_dict()
        if entity is not None:
            entry["entity"] = entity.name
            entry["entity_state"] = self.scene.entity_state(entity.name)
        entry["active_pairs"] = [
            [sorted(ga), sorted(gb)] for ga, gb in self.scene.collision_pairs
        ]
        self.state_log.append(entry)
        if self._state_log_fh is not None:
            self._state_log_fh.write(json.dumps(entry) + "\n")
            self._state_log_fh.flush()

    def close(self) -> None:
        if self._state_log_fh is not None:
            self._state_log_fh.close()
            self._state_log_fh = None
