"""Triangle meshes and file ingestion (ASCII STL, Wavefront OBJ).

All coordinates are millimetres. OBJ faces must already be triangulated;
quads and n-gons are rejected rather than fanned.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEGENERATE_AREA = 1e-12  # mm^2


class MeshError(ValueError):
    pass


@dataclass
class TriMesh:
    vertices: np.ndarray  # (n, 3) float mm
    triangles: np.ndarray  # (m, 3) int vertex indices

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    def validate(self) -> "TriMesh":
        if len(self.vertices) == 0 or len(self.triangles) == 0:
            raise MeshError("empty geometry")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle index out of range")
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        if np.any(areas <= DEGENERATE_AREA):
            bad = int(np.argmax(areas <= DEGENERATE_AREA))
            raise MeshError(f"degenerate triangle {bad} (area {areas[bad]:.3e} mm^2)")
        return self

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def triangle_vertices(self) -> np.ndarray:
        """(m, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    @staticmethod
    def box(size_x: float, size_y: float, size_z: float, origin="center") -> "TriMesh":
        """Axis-aligned box. origin 'center' or 'corner' (min corner at 0)."""
        hx, hy, hz = size_x / 2.0, size_y / 2.0, size_z / 2.0
        if origin == "center":
            lo, hi = np.array([-hx, -hy, -hz]), np.array([hx, hy, hz])
        elif origin == "corner":
            lo, hi = np.zeros(3), np.array([size_x, size_y, size_z])
        else:
            raise ValueError(f"unknown origin {origin!r}")
        x0, y0, z0 = lo
        x1, y1, z1 = hi
        verts = np.array(
            [
                [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
                [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
            ]
        )
        faces = np.array(
            [
                [0, 2, 1], [0, 3, 2],  # bottom
                [4, 5, 6], [4, 6, 7],  # top
                [0, 1, 5], [0, 5, 4],  # front
                [2, 3, 7], [2, 7, 6],  # back
                [1, 2, 6], [1, 6, 5],  # right
                [3, 0, 4], [3, 4, 7],  # left
            ]
        )
        return TriMesh(verts, faces).validate()


def load_stl_ascii(path) -> TriMesh:
    path = Path(path)
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    index: dict[tuple, int] = {}
    current: list[int] = []
    with open(path, "r", encoding="utf-8", errors="strict") as fh:
        first = fh.readline()
        if not first.lstrip().lower().startswith("solid"):
            raise MeshError(f"{path}: not an ASCII STL (missing 'solid' header)")
        for lineno, line in enumerate(fh, start=2):
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "vertex":
                if len(tokens) != 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex line")
                key = (float(tokens[1]), float(tokens[2]), float(tokens[3]))
                if key not in index:
                    index[key] = len(verts)
                    verts.append(list(key))
                current.append(index[key])
            elif tokens[0] == "endfacet":
                if len(current) != 3:
                    raise MeshError(f"{path}:{lineno}: facet with {len(current)} vertices")
                tris.append(current)
                current = []
    if not tris:
        raise MeshError(f"{path}: empty geometry")
    return TriMesh(np.array(verts), np.array(tris)).validate()


def load_obj(path) -> TriMesh:
    path = Path(path)
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if tokens[0] == "v":
                verts.append([float(t) for t in tokens[1:4]])
            elif tokens[0] == "f":
                corners = tokens[1:]
                if len(corners) != 3:
                    raise MeshError(
                        f"{path}:{lineno}: face with {len(corners)} vertices (triangles only)"
                    )
                idx = []
                for c in corners:
                    i = int(c.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                tris.append(idx)
    if not tris:
        raise MeshError(f"{path}: empty geometry")
    return TriMesh(np.array(verts), np.array(tris)).validate()


def load_mesh(path) -> TriMesh:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".stl":
        return load_stl_ascii(path)
    if suffix == ".obj":
        return load_obj(path)
    raise MeshError(f"{path}: unsupported mesh format {suffix!r}")
