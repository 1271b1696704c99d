from .pose import Pose
from .mesh import TriMesh, load_mesh, load_obj, load_stl_ascii
from .distance import Witness, Contact, closest_pair, contact_estimate

__all__ = [
    "Pose",
    "TriMesh",
    "load_mesh",
    "load_obj",
    "load_stl_ascii",
    "Witness",
    "Contact",
    "closest_pair",
    "contact_estimate",
]
