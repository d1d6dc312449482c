"""Mesh container and curve/offset primitives used throughout the pipeline.

Points are plain numpy arrays: shape (2,) or (n, 2) for the planar template
work, (3,) or (n, 3) once meshes exist.  All functions are pure; meshes are
treated as immutable after construction (use :func:`dataclasses.replace` or
:meth:`ClothMesh.copy` to derive modified ones).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

_EPS = 1e-12


@dataclass
class ClothMesh:
    """Triangle mesh with UVs and named keypoint anchors.

    vertices            (V, 3) float64
    triangles           (T, 3) int32, CCW when viewed from +z for flat meshes
    uvs                 (V, 2) float64 in [0, 1]^2
    keypoint_vertices   name -> vertex index
    category            free-form tag ("towel", "tshirt", "shorts", ...)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    uvs: np.ndarray
    keypoint_vertices: dict[str, int] = field(default_factory=dict)
    category: str = ""

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        self.uvs = np.ascontiguousarray(self.uvs, dtype=np.float64)

    def copy(self) -> "ClothMesh":
        return ClothMesh(
            self.vertices.copy(),
            self.triangles.copy(),
            self.uvs.copy(),
            dict(self.keypoint_vertices),
            self.category,
        )

    def with_vertices(self, vertices: np.ndarray) -> "ClothMesh":
        return replace(self, vertices=np.asarray(vertices, dtype=np.float64))

    @property
    def num_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def num_triangles(self) -> int:
        return int(self.triangles.shape[0])

    def validate(self) -> None:
        """Raise ValueError on malformed data (bad shapes, dangling indices,
        non-finite coordinates, degenerate or duplicated triangles)."""
        v, t, uv = self.vertices, self.triangles, self.uvs
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (V, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError(f"triangles must be (T, 3), got {t.shape}")
        if uv.shape != (v.shape[0], 2):
            raise ValueError(f"uvs must be (V, 2) matching vertices, got {uv.shape}")
        if not np.isfinite(v).all():
            raise ValueError("vertices contain non-finite values")
        if not np.isfinite(uv).all():
            raise ValueError("uvs contain non-finite values")
        if t.size:
            if t.min() < 0 or t.max() >= v.shape[0]:
                raise ValueError("triangle indices out of range")
            if (np.sort(t, axis=1)[:, :-1] == np.sort(t, axis=1)[:, 1:]).any():
                raise ValueError("triangle with repeated vertex")
        for name, idx in self.keypoint_vertices.items():
            if not 0 <= idx < v.shape[0]:
                raise ValueError(f"keypoint {name!r} references vertex {idx} out of range")


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Unsigned triangle areas; works for (V, 2) and (V, 3) vertex arrays."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    if vertices.shape[1] == 2:
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        return 0.5 * np.abs(cross)
    n = np.cross(b - a, c - a)
    return 0.5 * np.linalg.norm(n, axis=1)


def signed_triangle_areas_2d(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    return 0.5 * cross


def _edge_keys(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Directed edge list plus scalar undirected keys (min * big + max)."""
    directed = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    big = int(triangles.max()) + 2 if triangles.size else 2
    lo = np.minimum(directed[:, 0], directed[:, 1]).astype(np.int64)
    hi = np.maximum(directed[:, 0], directed[:, 1]).astype(np.int64)
    return directed, lo * big + hi, big


def unique_edges(triangles: np.ndarray) -> np.ndarray:
    """All undirected edges of a triangle array, as sorted (E, 2) index pairs."""
    _, keys, big = _edge_keys(triangles)
    uniq = np.unique(keys)
    return np.column_stack([uniq // big, uniq % big])


def edge_use_counts(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Undirected edges with the number of triangles sharing each."""
    _, keys, big = _edge_keys(triangles)
    uniq, counts = np.unique(keys, return_counts=True)
    return np.column_stack([uniq // big, uniq % big]), counts


def boundary_edges(triangles: np.ndarray) -> np.ndarray:
    """Directed boundary edges (a, b), oriented as they appear in their owning triangle."""
    directed, keys, _ = _edge_keys(triangles)
    _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    return directed[counts[inv] == 1]


def is_edge_manifold(triangles: np.ndarray) -> bool:
    _, counts = edge_use_counts(triangles)
    return bool((counts <= 2).all())


def vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area-weighted per-vertex normals (unnormalized cross products summed,
    then normalized).  Degenerate vertices fall back to +z."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    fn = np.cross(b - a, c - a)  # magnitude = 2 * area, so summing is area weighting
    out = np.zeros_like(vertices)
    nv = vertices.shape[0]
    for k in range(3):
        idx = triangles[:, k]
        for d in range(3):
            out[:, d] += np.bincount(idx, weights=fn[:, d], minlength=nv)
    norms = np.linalg.norm(out, axis=1)
    bad = norms < _EPS
    out[bad] = (0.0, 0.0, 1.0)
    norms[bad] = 1.0
    return out / norms[:, None]


def sample_bezier(p0, p1, p2, n: int) -> np.ndarray:
    """Sample a quadratic bezier at n uniform parameter values, endpoints included.

    Returns an (n, 2) array.  n must be at least 2.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1.0 - t) ** 2 * p0 + 2.0 * (1.0 - t) * t * p1 + t**2 * p2


def round_corner(prev, corner, nxt, radius: float, n: int) -> np.ndarray:
    """Replace a polygon corner by a tangent circular arc.

    The arc of the given radius is tangent to segments corner->prev and
    corner->nxt; the returned (n, 2) points run from the tangent point on the
    prev side to the tangent point on the nxt side.  radius == 0 returns the
    corner itself as a (1, 2) array.  Raises ValueError when the radius does
    not fit (tangent points would leave either segment) or the three points
    are collinear.
    """
    if radius < 0.0:
        raise ValueError("radius must be non-negative")
    corner = np.asarray(corner, dtype=np.float64)
    if radius == 0.0:
        return corner[None, :].copy()
    if n < 2:
        raise ValueError(f"need at least 2 arc samples, got {n}")
    prev = np.asarray(prev, dtype=np.float64)
    nxt = np.asarray(nxt, dtype=np.float64)

    v1 = prev - corner
    v2 = nxt - corner
    l1 = np.linalg.norm(v1)
    l2 = np.linalg.norm(v2)
    if l1 < _EPS or l2 < _EPS:
        raise ValueError("corner coincides with a neighbour")
    u1 = v1 / l1
    u2 = v2 / l2

    cos_phi = float(np.clip(np.dot(u1, u2), -1.0, 1.0))
    phi = np.arccos(cos_phi)
    if phi < 1e-9 or np.pi - phi < 1e-9:
        raise ValueError("corner is degenerate (collinear neighbours)")

    half = 0.5 * phi
    tangent_dist = radius / np.tan(half)
    if tangent_dist >= l1 or tangent_dist >= l2:
        raise ValueError(
            f"radius {radius} too large for corner (needs {tangent_dist:.6g} of both segments)"
        )

    bisector = u1 + u2
    bisector /= np.linalg.norm(bisector)
    center = corner + (radius / np.sin(half)) * bisector

    t1 = corner + tangent_dist * u1
    t2 = corner + tangent_dist * u2
    a1 = np.arctan2(t1[1] - center[1], t1[0] - center[0])
    a2 = np.arctan2(t2[1] - center[1], t2[0] - center[0])
    sweep = a2 - a1
    # shortest way around; the tangent arc never spans more than pi
    if sweep > np.pi:
        sweep -= 2.0 * np.pi
    elif sweep < -np.pi:
        sweep += 2.0 * np.pi
    angles = a1 + sweep * np.linspace(0.0, 1.0, n)
    return center[None, :] + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def polygon_signed_area(points: np.ndarray) -> float:
    p = np.asarray(points, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_is_simple(points: np.ndarray) -> bool:
    """True when no two non-adjacent edges of the closed polygon intersect
    and no two vertices coincide.  O(n^2) but vectorized over edge pairs."""
    p = np.asarray(points, dtype=np.float64)
    n = p.shape[0]
    if n < 3:
        return False
    # coincident vertices make the polygon degenerate
    diff = p[:, None, :] - p[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 1.0)
    if (d2 < _EPS**2).any():
        return False

    a = p
    b = np.roll(p, -1, axis=0)
    i_idx, j_idx = np.triu_indices(n, k=1)
    # skip adjacent edges (share a vertex), including the wrap-around pair
    adjacent = (j_idx - i_idx == 1) | ((i_idx == 0) & (j_idx == n - 1))
    i_idx, j_idx = i_idx[~adjacent], j_idx[~adjacent]
    if i_idx.size == 0:
        return True
    return not _segments_intersect(a[i_idx], b[i_idx], a[j_idx], b[j_idx]).any()


def _orient(a, b, c):
    """Sign of the cross product (b-a) x (c-a); >0 left turn, <0 right, 0 collinear."""
    v = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (
        c[..., 0] - a[..., 0]
    )
    return np.sign(v) * (np.abs(v) > _EPS)


def _on_segment(a, b, c):
    """Whether collinear point c lies within segment ab's bounding box."""
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return ((c >= lo - _EPS) & (c <= hi + _EPS)).all(axis=-1)


def _segments_intersect(a, b, c, d):
    """Vectorized proper/improper segment intersection test (ab vs cd)."""
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    touch = (
        ((o1 == 0) & _on_segment(a, b, c))
        | ((o2 == 0) & _on_segment(a, b, d))
        | ((o3 == 0) & _on_segment(c, d, a))
        | ((o4 == 0) & _on_segment(c, d, b))
    )
    return proper | touch


def vertex_adjacency(triangles: np.ndarray, num_vertices: int) -> list[np.ndarray]:
    """Sorted neighbour index array per vertex (1-ring over mesh edges)."""
    edges = unique_edges(triangles)
    nbr: list[list[int]] = [[] for _ in range(num_vertices)]
    for a, b in edges:
        nbr[int(a)].append(int(b))
        nbr[int(b)].append(int(a))
    return [np.array(sorted(v), dtype=np.int64) for v in nbr]


def ring_neighbors(mesh: ClothMesh, vertex: int, k: int) -> np.ndarray:
    """Vertices within edge-graph distance k of the given vertex (the k-ring
    neighborhood).

    Only k = 1 and k = 2 are supported; the result is sorted and excludes
    the start vertex.
    """
    if k not in (1, 2):
        raise ValueError(f"ring distance must be 1 or 2, got {k}")
    if not 0 <= vertex < mesh.num_vertices:
        raise ValueError(f"vertex {vertex} out of range")
    adj = vertex_adjacency(mesh.triangles, mesh.num_vertices)
    ring = set(adj[vertex].tolist())
    if k == 2:
        for v in list(ring):
            ring.update(adj[v].tolist())
    ring.discard(vertex)
    return np.array(sorted(ring), dtype=np.int64)


def solidify(mesh: ClothMesh, thickness: float) -> ClothMesh:
    """Extrude a surface mesh into a watertight solid of the given thickness.

    Vertices are offset by +/- thickness/2 along area-weighted vertex normals;
    boundary edges gain side walls.  The first V output vertices are the top
    copy, so keypoint indices remain valid.  Requires an edge-manifold input
    with non-empty boundary.
    """
    if thickness <= 0.0:
        raise ValueError("thickness must be positive")
    if not is_edge_manifold(mesh.triangles):
        raise ValueError("mesh is not edge-manifold")
    bedges = boundary_edges(mesh.triangles)
    if bedges.shape[0] == 0:
        raise ValueError("mesh has no boundary (already closed)")

    v = mesh.vertices
    nv = v.shape[0]
    normals = vertex_normals(v, mesh.triangles)
    half = 0.5 * thickness
    top = v + half * normals
    bottom = v - half * normals
    verts = np.vstack([top, bottom])

    top_tris = mesh.triangles.copy()
    bottom_tris = mesh.triangles[:, ::-1] + nv
    # boundary edge (a, b) runs CCW seen from the top side; the outward side
    # wall is then (a, bottom_a, bottom_b) + (a, bottom_b, b)
    a = bedges[:, 0]
    b = bedges[:, 1]
    side1 = np.stack([a, a + nv, b + nv], axis=1)
    side2 = np.stack([a, b + nv, b], axis=1)
    tris = np.vstack([top_tris, bottom_tris, side1, side2]).astype(np.int32)

    out = ClothMesh(
        verts,
        tris,
        np.vstack([mesh.uvs, mesh.uvs]),
        dict(mesh.keypoint_vertices),
        mesh.category,
    )
    _, counts = edge_use_counts(out.triangles)
    if not (counts == 2).all():
        raise ValueError("solidified mesh is not watertight")
    return out
