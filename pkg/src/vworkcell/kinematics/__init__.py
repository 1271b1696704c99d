from .chains import (
    IKSolveRecord,
    Joint,
    OutOfWorkspace,
    SerialChain,
    fk,
    ik,
    planar_2r_chain,
    planar_3r_chain,
    spherical_6r_chain,
)
from .mannequin import Mannequin, default_mannequin
from .entities import SolidEntity, RobotEntity, MannequinEntity, move_entity, pivot_frame

__all__ = [
    "IKSolveRecord",
    "Joint",
    "OutOfWorkspace",
    "SerialChain",
    "fk",
    "ik",
    "planar_2r_chain",
    "planar_3r_chain",
    "spherical_6r_chain",
    "Mannequin",
    "default_mannequin",
    "SolidEntity",
    "RobotEntity",
    "MannequinEntity",
    "move_entity",
    "pivot_frame",
]
