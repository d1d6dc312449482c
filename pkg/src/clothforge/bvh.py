"""Bounding volume hierarchy over triangle soups, with numba ray kernels.

The tree is built in numpy (median split on the longest centroid axis) and
stored as flat arrays so the traversal kernels can be jit-compiled.  Rays
intersect triangles via Moller-Trumbore with inclusive edge/vertex bounds;
among equal-t hits the one with the smallest (object id, triangle index)
wins, matching a brute-force scan in that order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

_LEAF_SIZE = 4
_PARALLEL_EPS = 1e-14
_BARY_EPS = 1e-9


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray  # need not be normalized

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)


@dataclass
class Hit:
    t: float
    object_id: int
    triangle_index: int
    u: float
    v: float


@dataclass
class Bvh:
    """Flattened BVH. Leaves reference a contiguous range of reordered
    primitives; internal nodes reference two children."""

    node_min: np.ndarray  # (N, 3)
    node_max: np.ndarray  # (N, 3)
    node_left: np.ndarray  # (N,) child index or -1 for leaves
    node_right: np.ndarray  # (N,)
    node_start: np.ndarray  # (N,) first primitive of a leaf
    node_count: np.ndarray  # (N,) primitive count of a leaf, 0 for internal
    tri_a: np.ndarray  # (M, 3) first vertex of each (reordered) triangle
    tri_ab: np.ndarray  # (M, 3) edge vertex1 - vertex0
    tri_ac: np.ndarray  # (M, 3) edge vertex2 - vertex0
    object_ids: np.ndarray  # (M,) owning object per primitive
    triangle_indices: np.ndarray  # (M,) index within the owning object

    @property
    def num_primitives(self) -> int:
        return int(self.tri_a.shape[0])


def build_bvh(objects: list[tuple[int, np.ndarray]]) -> Bvh:
    """Build a BVH from ``(object_id, triangles)`` pairs, where triangles is
    an (M, 3, 3) array of vertex coordinates.  Empty objects are allowed;
    a completely empty soup produces a single empty leaf."""
    tri_list = []
    obj_list = []
    idx_list = []
    for obj_id, tris in objects:
        tris = np.asarray(tris, dtype=np.float64)
        if tris.size == 0:
            continue
        if tris.ndim != 3 or tris.shape[1:] != (3, 3):
            raise ValueError(f"triangles must be (M, 3, 3), got {tris.shape}")
        tri_list.append(tris)
        obj_list.append(np.full(tris.shape[0], int(obj_id), dtype=np.int64))
        idx_list.append(np.arange(tris.shape[0], dtype=np.int64))
    if tri_list:
        tris = np.concatenate(tri_list)
        obj_ids = np.concatenate(obj_list)
        tri_idx = np.concatenate(idx_list)
    else:
        tris = np.empty((0, 3, 3))
        obj_ids = np.empty(0, dtype=np.int64)
        tri_idx = np.empty(0, dtype=np.int64)
    if not np.isfinite(tris).all():
        raise ValueError("triangle soup contains non-finite coordinates")

    m = tris.shape[0]
    lo = tris.min(axis=1)
    hi = tris.max(axis=1)
    centroids = tris.mean(axis=1)
    order = np.arange(m)

    node_min, node_max = [], []
    node_left, node_right = [], []
    node_start, node_count = [], []

    def new_node():
        node_min.append(None)
        node_max.append(None)
        node_left.append(-1)
        node_right.append(-1)
        node_start.append(0)
        node_count.append(0)
        return len(node_min) - 1

    root = new_node()
    stack = [(root, 0, m)]
    while stack:
        node, start, end = stack.pop()
        sel = order[start:end]
        if sel.size:
            node_min[node] = lo[sel].min(axis=0)
            node_max[node] = hi[sel].max(axis=0)
        else:
            node_min[node] = np.zeros(3)
            node_max[node] = np.zeros(3)
        count = end - start
        if count <= _LEAF_SIZE:
            node_start[node] = start
            node_count[node] = count
            continue
        cen = centroids[sel]
        extent = cen.max(axis=0) - cen.min(axis=0)
        axis = int(np.argmax(extent))
        if extent[axis] <= 0.0:
            node_start[node] = start
            node_count[node] = count
            continue
        half = count // 2
        part = np.argpartition(cen[:, axis], half, kind="introselect")
        order[start:end] = sel[part]
        left = new_node()
        right = new_node()
        node_left[node] = left
        node_right[node] = right
        stack.append((left, start, start + half))
        stack.append((right, start + half, end))

    tri_sorted = tris[order]
    a = np.ascontiguousarray(tri_sorted[:, 0])
    return Bvh(
        node_min=np.ascontiguousarray(np.array(node_min, dtype=np.float64)),
        node_max=np.ascontiguousarray(np.array(node_max, dtype=np.float64)),
        node_left=np.array(node_left, dtype=np.int64),
        node_right=np.array(node_right, dtype=np.int64),
        node_start=np.array(node_start, dtype=np.int64),
        node_count=np.array(node_count, dtype=np.int64),
        tri_a=a,
        tri_ab=np.ascontiguousarray(tri_sorted[:, 1] - tri_sorted[:, 0]),
        tri_ac=np.ascontiguousarray(tri_sorted[:, 2] - tri_sorted[:, 0]),
        object_ids=obj_ids[order],
        triangle_indices=tri_idx[order],
    )


@njit(cache=True, inline="always")
def _intersect_tri(ox, oy, oz, dx, dy, dz, ax, ay, az,
                   abx, aby, abz, acx, acy, acz):
    """Moller-Trumbore; returns (t, u, v) or t = -1 for a miss.  Boundary
    hits (u, v on the edge) count as hits."""
    px = dy * acz - dz * acy
    py = dz * acx - dx * acz
    pz = dx * acy - dy * acx
    det = abx * px + aby * py + abz * pz
    if det > -_PARALLEL_EPS and det < _PARALLEL_EPS:
        return -1.0, 0.0, 0.0
    inv = 1.0 / det
    tx = ox - ax
    ty = oy - ay
    tz = oz - az
    u = (tx * px + ty * py + tz * pz) * inv
    if u < -_BARY_EPS or u > 1.0 + _BARY_EPS:
        return -1.0, 0.0, 0.0
    qx = ty * abz - tz * aby
    qy = tz * abx - tx * abz
    qz = tx * aby - ty * abx
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -_BARY_EPS or u + v > 1.0 + _BARY_EPS:
        return -1.0, 0.0, 0.0
    t = (acx * qx + acy * qy + acz * qz) * inv
    return t, u, v


@njit(cache=True, inline="always")
def _slab_hit(ox, oy, oz, dx, dy, dz, bmin, bmax, tbest):
    """Ray vs AABB; True when the box overlaps (0, tbest].  Axis-parallel
    rays are handled explicitly to avoid 0 * inf artifacts."""
    tn = 0.0
    tf = tbest
    if dx == 0.0:
        if ox < bmin[0] or ox > bmax[0]:
            return False
    else:
        ix = 1.0 / dx
        t1 = (bmin[0] - ox) * ix
        t2 = (bmax[0] - ox) * ix
        tn = max(tn, min(t1, t2))
        tf = min(tf, max(t1, t2))
    if dy == 0.0:
        if oy < bmin[1] or oy > bmax[1]:
            return False
    else:
        iy = 1.0 / dy
        t1 = (bmin[1] - oy) * iy
        t2 = (bmax[1] - oy) * iy
        tn = max(tn, min(t1, t2))
        tf = min(tf, max(t1, t2))
    if dz == 0.0:
        if oz < bmin[2] or oz > bmax[2]:
            return False
    else:
        iz = 1.0 / dz
        t1 = (bmin[2] - oz) * iz
        t2 = (bmax[2] - oz) * iz
        tn = max(tn, min(t1, t2))
        tf = min(tf, max(t1, t2))
    return tf >= tn and tf > 0.0


@njit(cache=True)
def _raycast_kernel(node_min, node_max, node_left, node_right, node_start,
                    node_count, tri_a, tri_ab, tri_ac, object_ids, tri_indices,
                    origins, directions, t_max, out_t, out_obj, out_tri,
                    out_u, out_v):
    n_rays = origins.shape[0]
    stack = np.empty(128, dtype=np.int64)
    for r in range(n_rays):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = directions[r, 0], directions[r, 1], directions[r, 2]
        best_t = t_max[r]
        best_obj = -1
        best_tri = -1
        best_u = 0.0
        best_v = 0.0
        if tri_a.shape[0] > 0:
            top = 0
            stack[top] = 0
            top += 1
            while top > 0:
                top -= 1
                node = stack[top]
                if not _slab_hit(ox, oy, oz, dx, dy, dz,
                                 node_min[node], node_max[node], best_t):
                    continue
                if node_count[node] > 0 or node_left[node] < 0:
                    s = node_start[node]
                    e = s + node_count[node]
                    for p in range(s, e):
                        t, u, v = _intersect_tri(
                            ox, oy, oz, dx, dy, dz,
                            tri_a[p, 0], tri_a[p, 1], tri_a[p, 2],
                            tri_ab[p, 0], tri_ab[p, 1], tri_ab[p, 2],
                            tri_ac[p, 0], tri_ac[p, 1], tri_ac[p, 2])
                        if t <= 0.0 or t > best_t:
                            continue
                        if t < best_t or best_obj < 0 or (
                            object_ids[p] < best_obj
                            or (object_ids[p] == best_obj and tri_indices[p] < best_tri)
                        ):
                            best_t = t
                            best_obj = object_ids[p]
                            best_tri = tri_indices[p]
                            best_u = u
                            best_v = v
                else:
                    stack[top] = node_left[node]
                    top += 1
                    stack[top] = node_right[node]
                    top += 1
        out_t[r] = best_t if best_obj >= 0 else -1.0
        out_obj[r] = best_obj
        out_tri[r] = best_tri
        out_u[r] = best_u
        out_v[r] = best_v


@njit(cache=True)
def _anyhit_kernel(node_min, node_max, node_left, node_right, node_start,
                   node_count, tri_a, tri_ab, tri_ac, origins, directions,
                   t_max, out_hit):
    n_rays = origins.shape[0]
    stack = np.empty(128, dtype=np.int64)
    for r in range(n_rays):
        out_hit[r] = False
        if tri_a.shape[0] == 0:
            continue
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = directions[r, 0], directions[r, 1], directions[r, 2]
        limit = t_max[r]
        top = 0
        stack[top] = 0
        top += 1
        while top > 0 and not out_hit[r]:
            top -= 1
            node = stack[top]
            if not _slab_hit(ox, oy, oz, dx, dy, dz,
                             node_min[node], node_max[node], limit):
                continue
            if node_count[node] > 0 or node_left[node] < 0:
                s = node_start[node]
                e = s + node_count[node]
                for p in range(s, e):
                    t, _, _ = _intersect_tri(
                        ox, oy, oz, dx, dy, dz,
                        tri_a[p, 0], tri_a[p, 1], tri_a[p, 2],
                        tri_ab[p, 0], tri_ab[p, 1], tri_ab[p, 2],
                        tri_ac[p, 0], tri_ac[p, 1], tri_ac[p, 2])
                    if 0.0 < t <= limit:
                        out_hit[r] = True
                        break
            else:
                stack[top] = node_left[node]
                top += 1
                stack[top] = node_right[node]
                top += 1


def raycast(bvh: Bvh, ray: Ray, t_max: float = np.inf) -> Hit | None:
    """Nearest intersection with 0 < t <= t_max, or None."""
    t, obj, tri, u, v = raycast_batch(
        bvh, ray.origin[None, :], ray.direction[None, :], np.array([t_max])
    )
    if obj[0] < 0:
        return None
    return Hit(float(t[0]), int(obj[0]), int(tri[0]), float(u[0]), float(v[0]))


def raycast_batch(bvh: Bvh, origins: np.ndarray, directions: np.ndarray,
                  t_max: np.ndarray):
    """Vectorized nearest-hit queries.  Returns (t, object_id, triangle_index,
    u, v) arrays; misses have object_id -1 and t -1."""
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    directions = np.ascontiguousarray(directions, dtype=np.float64)
    t_max = np.ascontiguousarray(t_max, dtype=np.float64)
    n = origins.shape[0]
    out_t = np.empty(n)
    out_obj = np.empty(n, dtype=np.int64)
    out_tri = np.empty(n, dtype=np.int64)
    out_u = np.empty(n)
    out_v = np.empty(n)
    _raycast_kernel(
        bvh.node_min, bvh.node_max, bvh.node_left, bvh.node_right,
        bvh.node_start, bvh.node_count, bvh.tri_a, bvh.tri_ab, bvh.tri_ac,
        bvh.object_ids, bvh.triangle_indices,
        origins, directions, t_max, out_t, out_obj, out_tri, out_u, out_v,
    )
    return out_t, out_obj, out_tri, out_u, out_v


def anyhit_batch(bvh: Bvh, origins: np.ndarray, directions: np.ndarray,
                 t_max: np.ndarray) -> np.ndarray:
    """Vectorized occlusion queries: True where anything lies in (0, t_max]."""
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    directions = np.ascontiguousarray(directions, dtype=np.float64)
    t_max = np.ascontiguousarray(t_max, dtype=np.float64)
    out = np.zeros(origins.shape[0], dtype=np.bool_)
    _anyhit_kernel(
        bvh.node_min, bvh.node_max, bvh.node_left, bvh.node_right,
        bvh.node_start, bvh.node_count, bvh.tri_a, bvh.tri_ab, bvh.tri_ac,
        origins, directions, t_max, out,
    )
    return out
