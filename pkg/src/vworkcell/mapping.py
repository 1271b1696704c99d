"""Device-space to scene-space motion mapping.

Translation sensitivity has four levels: three fixed gains (rough, medium,
fine, in scene-mm per device-mm) and an adaptive "screen" level whose gain is
the visible world span divided by the device workspace width, so a full-width
stylus stroke always crosses the viewport regardless of zoom. Displacements
can be expressed in the world frame, the screen (camera) frame or a
user-defined frame. Clutching re-anchors device motion so the small device
workspace can cover the whole scene without jumps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device import DEFAULT_LIMITS
from .device import StylusState
from .geometry.pose import Pose

DEVICE_WORKSPACE_WIDTH_MM = DEFAULT_LIMITS.workspace_mm[0]

SCALE_LEVELS = ("rough", "medium", "fine", "screen")
FRAME_MODES = ("world", "screen", "user")


@dataclass
class Viewport:
    camera_pose: Pose = field(default_factory=Pose.identity)
    world_span_mm: float = 1600.0


@dataclass
class MappingConfig:
    scale_level: str = "fine"
    scale_factors: dict = field(default_factory=lambda: {"rough": 10.0, "medium": 3.0, "fine": 1.0})
    frame_mode: str = "world"
    user_frame: Pose = field(default_factory=Pose.identity)
    viewport: Viewport = field(default_factory=Viewport)

    def __post_init__(self):
        if self.scale_level not in SCALE_LEVELS:
            raise ValueError(f"unknown scale level {self.scale_level!r}")
        if self.frame_mode not in FRAME_MODES:
            raise ValueError(f"unknown frame mode {self.frame_mode!r}")
        f = self.scale_factors
        if any(f[k] <= 0 for k in ("rough", "medium", "fine")):
            raise ValueError("scale factors must be positive")
        if not f["fine"] <= f["medium"] <= f["rough"]:
            raise ValueError("scale factors must satisfy fine <= medium <= rough")

    def translation_factor(self) -> float:
        if self.scale_level == "screen":
            span = self.viewport.world_span_mm
            if span <= 0:
                raise ValueError("world span must be positive")
            return span / DEVICE_WORKSPACE_WIDTH_MM
        return float(self.scale_factors[self.scale_level])


def map_translation(delta_device_mm, cfg: MappingConfig) -> np.ndarray:
    """Scale a device-frame translation into scene millimetres."""
    return np.asarray(delta_device_mm, dtype=float) * cfg.translation_factor()


def frame_rotation(cfg: MappingConfig) -> Pose:
    if cfg.frame_mode == "world":
        return Pose.identity()
    if cfg.frame_mode == "screen":
        return Pose(np.zeros(3), cfg.viewport.camera_pose.orientation.copy())
    return Pose(np.zeros(3), cfg.user_frame.orientation.copy())


def map_frame(delta_scene_mm, cfg: MappingConfig) -> np.ndarray:
    """Rotate a scaled delta from the active displacement frame into world axes."""
    return frame_rotation(cfg).rotate_vector(np.asarray(delta_scene_mm, dtype=float))


def map_delta(delta_device_mm, cfg: MappingConfig) -> np.ndarray:
    return map_frame(map_translation(delta_device_mm, cfg), cfg)


@dataclass
class ClutchState:
    engaged: bool = False
    device_anchor: Pose = field(default_factory=Pose.identity)
    scene_anchor: Pose = field(default_factory=Pose.identity)

    def engage(self, device_pose: Pose, scene_pose: Pose) -> None:
        self.engaged = True
        self.device_anchor = device_pose.copy()
        self.scene_anchor = scene_pose.copy()

    def disengage(self) -> None:
        self.engaged = False


def apply_clutch(stylus: StylusState, clutch: ClutchState, cfg: MappingConfig) -> Pose | None:
    """Scene pose delta for the current stylus sample, or None when clutched out.

    Translation is anchor-relative, scaled and frame-rotated; orientation delta
    is applied unscaled but follows the same frame rotation.
    """
    if not clutch.engaged:
        return None
    device_delta = stylus.pose.position - clutch.device_anchor.position
    world_delta = map_delta(device_delta, cfg)
    rot = frame_rotation(cfg)
    ori_delta = stylus.pose.compose(clutch.device_anchor.inverse())
    ori_delta = Pose(np.zeros(3), ori_delta.orientation)
    world_ori = rot.compose(ori_delta).compose(rot.inverse())
    return Pose(world_delta, world_ori.orientation)


def committed_pose(clutch: ClutchState, delta: Pose) -> Pose:
    """Scene pose resulting from applying a clutch-relative delta to the anchor."""
    anchor = clutch.scene_anchor
    return Pose(
        anchor.position + delta.position,
        Pose(np.zeros(3), delta.orientation).compose(anchor).orientation,
    )
