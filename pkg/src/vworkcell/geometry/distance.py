"""Closest-pair queries between posed triangle meshes and contact synthesis.

The distance between two disjoint triangles is attained on a feature pair
(vertex/face or edge/edge); two triangles intersect iff an edge of one crosses
the face of the other or a degenerate feature distance hits zero. The pair
kernel below evaluates all 15 feature candidates plus the 6 edge/face crossing
tests, vectorized over an array of triangle pairs. The mesh-level query prunes
pairs with a per-mesh axis-aligned bounding-box tree and a best-first
traversal; intersections report a distance of exactly zero.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, TriMesh
from .pose import Pose

_EPS = 1e-12


# ---------------------------------------------------------------------------
# vectorized feature primitives
# ---------------------------------------------------------------------------

def closest_point_on_triangles(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Closest point to p[i] on triangle tri[i]; p (n,3), tri (n,3,3) -> (n,3)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = p - a

    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    denom = va + vb + vc
    denom = np.where(np.abs(denom) < _EPS, 1.0, denom)
    v_face = vb / denom
    w_face = vc / denom
    result = a + v_face[:, None] * ab + w_face[:, None] * ac

    # edge AC region
    w_ac = np.clip(d2 / np.where(np.abs(d2 - d6) < _EPS, 1.0, d2 - d6), 0.0, 1.0)
    cond_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    result = np.where(cond_ac[:, None], a + w_ac[:, None] * ac, result)

    # edge BC region
    d43 = d4 - d3
    w_bc = np.clip(d43 / np.where(np.abs(d43 + (d5 - d6)) < _EPS, 1.0, d43 + (d5 - d6)), 0.0, 1.0)
    cond_bc = (va <= 0) & (d43 >= 0) & ((d5 - d6) >= 0)
    result = np.where(cond_bc[:, None], b + w_bc[:, None] * (c - b), result)

    # edge AB region
    v_ab = np.clip(d1 / np.where(np.abs(d1 - d3) < _EPS, 1.0, d1 - d3), 0.0, 1.0)
    cond_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    result = np.where(cond_ab[:, None], a + v_ab[:, None] * ab, result)

    # vertex regions
    result = np.where(((d6 >= 0) & (d5 <= d6))[:, None], c, result)
    result = np.where(((d3 >= 0) & (d4 <= d3))[:, None], b, result)
    result = np.where(((d1 <= 0) & (d2 <= 0))[:, None], a, result)
    return result


def closest_points_on_segments(
    p1: np.ndarray, q1: np.ndarray, p2: np.ndarray, q2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Closest point pair between segments [p1,q1] and [p2,q2], batched (n,3)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b

    s = np.where(denom > _EPS, np.clip((b * f - c * e) / np.where(denom > _EPS, denom, 1.0), 0.0, 1.0), 0.0)
    e_safe = np.where(e > _EPS, e, 1.0)
    t = (b * s + f) / e_safe
    t_clamped = np.clip(t, 0.0, 1.0)
    a_safe = np.where(a > _EPS, a, 1.0)
    s = np.where(t != t_clamped, np.clip((b * t_clamped - c) / a_safe, 0.0, 1.0), s)
    t = t_clamped
    # degenerate segments collapse to endpoints
    s = np.where(a <= _EPS, 0.0, s)
    t = np.where(e <= _EPS, np.clip(f / e_safe, 0.0, 1.0), t)
    return p1 + s[:, None] * d1, p2 + t[:, None] * d2


def segments_cross_triangles(p0: np.ndarray, p1: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moller-Trumbore segment/triangle test, batched; returns (hit mask, hit point)."""
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    d = p1 - p0
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    parallel = np.abs(det) < _EPS
    inv = 1.0 / np.where(parallel, 1.0, det)
    s = p0 - tri[:, 0]
    u = np.einsum("ij,ij->i", s, h) * inv
    q = np.cross(s, e1)
    v = np.einsum("ij,ij->i", d, q) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    hit = (~parallel) & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)
    return hit, p0 + t[:, None] * d


def triangle_pair_distances(
    tris_a: np.ndarray, tris_b: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact distance and witness points for each triangle pair.

    tris_a, tris_b: (n, 3, 3). Returns (dist (n,), point_a (n,3), point_b (n,3));
    intersecting pairs report exactly 0 with coincident points.
    """
    n = len(tris_a)
    best = np.full(n, np.inf)
    pa = np.zeros((n, 3))
    pb = np.zeros((n, 3))

    def consider(cand_a, cand_b):
        nonlocal best, pa, pb
        d = np.linalg.norm(cand_a - cand_b, axis=1)
        better = d < best
        best = np.where(better, d, best)
        pa = np.where(better[:, None], cand_a, pa)
        pb = np.where(better[:, None], cand_b, pb)

    # vertices of A vs face of B and vice versa
    for i in range(3):
        va = tris_a[:, i]
        consider(va, closest_point_on_triangles(va, tris_b))
        vb = tris_b[:, i]
        consider(closest_point_on_triangles(vb, tris_a), vb)

    # edge/edge
    for i in range(3):
        a0, a1 = tris_a[:, i], tris_a[:, (i + 1) % 3]
        for j in range(3):
            b0, b1 = tris_b[:, j], tris_b[:, (j + 1) % 3]
            ca, cb = closest_points_on_segments(a0, a1, b0, b1)
            consider(ca, cb)

    # edge/face crossings force distance to exactly zero
    crossing = np.zeros(n, dtype=bool)
    hit_point = np.zeros((n, 3))
    for i in range(3):
        hit, pt = segments_cross_triangles(tris_a[:, i], tris_a[:, (i + 1) % 3], tris_b)
        new = hit & ~crossing
        hit_point = np.where(new[:, None], pt, hit_point)
        crossing |= hit
        hit, pt = segments_cross_triangles(tris_b[:, i], tris_b[:, (i + 1) % 3], tris_a)
        new = hit & ~crossing
        hit_point = np.where(new[:, None], pt, hit_point)
        crossing |= hit

    best = np.where(crossing, 0.0, best)
    pa = np.where(crossing[:, None], hit_point, pa)
    pb = np.where(crossing[:, None], hit_point, pb)
    return best, pa, pb


# ---------------------------------------------------------------------------
# AABB tree
# ---------------------------------------------------------------------------

_LEAF_SIZE = 8


class AabbTree:
    """Median-split AABB tree over triangles already expressed in one frame."""

    def __init__(self, tri_verts: np.ndarray):
        self.tris = tri_verts
        lo = tri_verts.min(axis=1)
        hi = tri_verts.max(axis=1)
        centers = 0.5 * (lo + hi)
        self.order = np.arange(len(tri_verts))
        self.nodes: list[tuple[np.ndarray, np.ndarray, int, int, int, int]] = []
        # node: (lo, hi, left, right, start, count); leaf iff left < 0
        self._build(0, len(tri_verts), lo, hi, centers)

    def _build(self, start: int, end: int, lo: np.ndarray, hi: np.ndarray, centers: np.ndarray) -> int:
        idx = self.order[start:end]
        node_lo = lo[idx].min(axis=0)
        node_hi = hi[idx].max(axis=0)
        me = len(self.nodes)
        self.nodes.append((node_lo, node_hi, -1, -1, start, end - start))
        if end - start > _LEAF_SIZE:
            axis = int(np.argmax(node_hi - node_lo))
            mid = (start + end) // 2
            part = np.argsort(centers[idx, axis], kind="stable")
            self.order[start:end] = idx[part]
            left = self._build(start, mid, lo, hi, centers)
            right = self._build(mid, end, lo, hi, centers)
            n = self.nodes[me]
            self.nodes[me] = (n[0], n[1], left, right, n[4], n[5])
        return me

    def leaf_tris(self, node: int) -> np.ndarray:
        _, _, _, _, start, count = self.nodes[node]
        return self.order[start : start + count]


def _box_distance(lo_a, hi_a, lo_b, hi_b) -> float:
    d = np.maximum(0.0, np.maximum(lo_a - hi_b, lo_b - hi_a))
    return float(np.sqrt(np.dot(d, d)))


@dataclass
class Witness:
    """Closest point pair between two posed meshes, world frame, mm."""

    point_a: np.ndarray
    point_b: np.ndarray
    distance: float

    def to_dict(self) -> dict:
        return {
            "point_a": [float(v) for v in self.point_a],
            "point_b": [float(v) for v in self.point_b],
            "distance": float(self.distance),
        }


def closest_pair(mesh_a: TriMesh, pose_a: Pose, mesh_b: TriMesh, pose_b: Pose) -> Witness:
    """Global minimum distance between the posed surfaces, with witness points.

    Distance is exactly 0 when the meshes intersect (witness points coincide).
    """
    mesh_a.validate()
    mesh_b.validate()
    tris_a = pose_a.transform_points(mesh_a.vertices)[mesh_a.triangles]
    tris_b = pose_b.transform_points(mesh_b.vertices)[mesh_b.triangles]
    tree_a = AabbTree(tris_a)
    tree_b = AabbTree(tris_b)

    best = np.inf
    best_pa = np.zeros(3)
    best_pb = np.zeros(3)
    counter = 0  # heap tiebreaker
    heap = [(0.0, 0, 0, 0)]
    while heap:
        bound, _, ia, ib = heapq.heappop(heap)
        if bound >= best:
            break
        na = tree_a.nodes[ia]
        nb = tree_b.nodes[ib]
        leaf_a = na[2] < 0
        leaf_b = nb[2] < 0
        if leaf_a and leaf_b:
            ta = tree_a.leaf_tris(ia)
            tb = tree_b.leaf_tris(ib)
            pair_a = np.repeat(ta, len(tb))
            pair_b = np.tile(tb, len(ta))
            d, pa, pb = triangle_pair_distances(tris_a[pair_a], tris_b[pair_b])
            k = int(np.argmin(d))
            if d[k] < best:
                best = float(d[k])
                best_pa, best_pb = pa[k], pb[k]
                if best == 0.0:
                    break
            continue
        # split the node with the larger box
        if leaf_b or (not leaf_a and np.prod(na[1] - na[0]) >= np.prod(nb[1] - nb[0])):
            children = ((na[2], ib), (na[3], ib))
        else:
            children = ((ia, nb[2]), (ia, nb[3]))
        for ca, cb in children:
            la, ha = tree_a.nodes[ca][0], tree_a.nodes[ca][1]
            lb, hb = tree_b.nodes[cb][0], tree_b.nodes[cb][1]
            d = _box_distance(la, ha, lb, hb)
            if d < best:
                counter += 1
                heapq.heappush(heap, (d, counter, ca, cb))

    if best == 0.0:
        mid = 0.5 * (best_pa + best_pb)
        return Witness(mid.copy(), mid.copy(), 0.0)
    return Witness(best_pa, best_pb, best)


def closest_pair_brute(
    mesh_a: TriMesh, pose_a: Pose, mesh_b: TriMesh, pose_b: Pose, chunk: int = 128
) -> Witness:
    """Exhaustive triangle-pair minimization; the replay/verification oracle.

    No spatial pruning: every triangle of A is tested against every triangle
    of B (chunked only to bound memory).
    """
    mesh_a.validate()
    mesh_b.validate()
    tris_a = pose_a.transform_points(mesh_a.vertices)[mesh_a.triangles]
    tris_b = pose_b.transform_points(mesh_b.vertices)[mesh_b.triangles]
    best = np.inf
    best_pa = np.zeros(3)
    best_pb = np.zeros(3)
    nb = len(tris_b)
    for start in range(0, len(tris_a), chunk):
        block = tris_a[start : start + chunk]
        pair_a = np.repeat(np.arange(len(block)), nb)
        pair_b = np.tile(np.arange(nb), len(block))
        d, pa, pb = triangle_pair_distances(block[pair_a], tris_b[pair_b])
        k = int(np.argmin(d))
        if d[k] < best:
            best = float(d[k])
            best_pa, best_pb = pa[k], pb[k]
    if best == 0.0:
        mid = 0.5 * (best_pa + best_pb)
        return Witness(mid.copy(), mid.copy(), 0.0)
    return Witness(best_pa, best_pb, best)


# ---------------------------------------------------------------------------
# safety-zone contact
# ---------------------------------------------------------------------------

@dataclass
class Contact:
    """Synthesized contact inside the safety margin.

    normal points from the environment (side B) toward the moved entity (side A).
    """

    point: np.ndarray
    normal: np.ndarray
    depth: float


def contact_estimate(w: Witness, margin: float, fallback_normal) -> Contact | None:
    """Build a contact from a witness when it falls inside the safety margin."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    fallback_normal = np.asarray(fallback_normal, dtype=float)
    if abs(np.linalg.norm(fallback_normal) - 1.0) > 1e-9:
        raise ValueError("fallback normal must be unit length")
    if w.distance >= margin:
        return None
    delta = w.point_a - w.point_b
    if w.distance < 1e-9:
        normal = fallback_normal
    else:
        normal = delta / np.linalg.norm(delta)
    depth = min(max(margin - w.distance, 0.0), margin)
    point = 0.5 * (w.point_a + w.point_b)
    return Contact(point, normal, depth)
