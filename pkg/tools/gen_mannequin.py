"""Generate data/mannequin56.json, the default 56-DOF skeleton.

Run from the repo root: python3 tools/gen_mannequin.py
"""

import json
import math
from pathlib import Path

PI = math.pi

joints = []
index = {}


def add(name, parent_name, axis, offset, limits, group):
    joints.append(
        {
            "name": name,
            "parent": -1 if parent_name is None else index[parent_name],
            "axis": list(axis),
            "offset": {"position_mm": list(offset), "quat_wxyz": [1.0, 0.0, 0.0, 0.0]},
            "limits": list(limits),
            "group": group,
        }
    )
    index[name] = len(joints) - 1
    return name


X, Y, Z = (1, 0, 0), (0, 1, 0), (0, 0, 1)
WIDE = (-PI, PI)


def triplet(base, parent, offset, limits, group):
    add(f"{base}_x", parent, X, offset, limits, group)
    add(f"{base}_y", f"{base}_x", Y, (0, 0, 0), limits, group)
    add(f"{base}_z", f"{base}_y", Z, (0, 0, 0), limits, group)
    return f"{base}_z"


# trunk: three spine segments, 3 DOF each (indices 0..8)
p = None
p = triplet("spine1", p, (0, 0, 100), (-0.8, 0.8), "trunk")
p = triplet("spine2", p, (0, 0, 150), (-0.8, 0.8), "trunk")
chest = triplet("spine3", p, (0, 0, 150), (-0.8, 0.8), "trunk")

# neck 3 + head 2
neck = triplet("neck", chest, (0, 0, 200), (-1.0, 1.0), "neck")
add("head_x", neck, X, (0, 0, 120), (-0.7, 0.7), "head")
add("head_y", "head_x", Y, (0, 0, 0), (-0.7, 0.7), "head")

for side, sy in (("left", 1.0), ("right", -1.0)):
    # arm: clavicle 2 + shoulder 3 + elbow 2 + wrist 2 + hand 4 = 13
    add(f"{side}_clav_z", chest, Z, (0, sy * 80, 150), (-0.5, 0.5), "arm")
    add(f"{side}_clav_y", f"{side}_clav_z", Y, (0, 0, 0), (-0.5, 0.5), "arm")
    sh = triplet(f"{side}_shoulder", f"{side}_clav_y", (0, sy * 120, 0), WIDE, "arm")
    add(f"{side}_elbow_y", sh, Y, (0, 0, -300), (-2.6, 0.1), "arm")
    add(f"{side}_elbow_z", f"{side}_elbow_y", Z, (0, 0, 0), (-1.6, 1.6), "arm")
    add(f"{side}_wrist_x", f"{side}_elbow_z", X, (0, 0, -250), (-1.2, 1.2), "arm")
    add(f"{side}_wrist_y", f"{side}_wrist_x", Y, (0, 0, 0), (-1.2, 1.2), "arm")
    prev = f"{side}_wrist_y"
    for i in range(4):
        add(f"{side}_hand{i}", prev, Y, (0, 0, -30), (-1.5, 0.2), "hand")
        prev = f"{side}_hand{i}"

for side, sy in (("left", 1.0), ("right", -1.0)):
    # leg: hip 3 + knee 1 + ankle 3 + toe 1 = 8
    hip = triplet(f"{side}_hip", None, (0, sy * 90, -50), (-2.0, 2.0), "leg")
    add(f"{side}_knee", hip, Y, (0, 0, -400), (-0.1, 2.4), "leg")
    ank = triplet(f"{side}_ankle", f"{side}_knee", (0, 0, -400), (-0.8, 0.8), "leg")
    add(f"{side}_toe", ank, Y, (150, 0, -80), (-0.6, 0.6), "leg")

assert len(joints) == 56, len(joints)

effectors = {
    "left_hand": {
        "joint": index["left_wrist_y"],
        "tool": {"position_mm": [0, 0, -90], "quat_wxyz": [1.0, 0.0, 0.0, 0.0]},
    },
    "right_hand": {
        "joint": index["right_wrist_y"],
        "tool": {"position_mm": [0, 0, -90], "quat_wxyz": [1.0, 0.0, 0.0, 0.0]},
    },
}

out = Path(__file__).resolve().parent.parent / "src" / "vworkcell" / "data" / "mannequin56.json"
out.parent.mkdir(parents=True, exist_ok=True)
out.write_text(json.dumps({"joints": joints, "effectors": effectors}, indent=1), encoding="utf-8")
print(f"wrote {out} ({len(joints)} joints)")
