"""Curve sampling, corner rounding, ring queries and solidification."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from clothforge.geometry import (
    ClothMesh,
    ring_neighbors,
    round_corner,
    sample_bezier,
    solidify,
    triangle_areas,
    unique_edges,
    edge_use_counts,
    vertex_normals,
)


def _bezier_arc_length(p0, p1, p2):
    """Independent arc length via quadrature of |B'(t)|."""
    p0, p1, p2 = (np.asarray(p, dtype=float) for p in (p0, p1, p2))

    def speed(t):
        d = 2 * (1 - t) * (p1 - p0) + 2 * t * (p2 - p1)
        return float(np.hypot(d[0], d[1]))

    val, _ = quad(speed, 0.0, 1.0, limit=200)
    return val


def _bfs_ring(triangles, n_verts, start, k):
    """Vertices within graph distance k, via breadth-first search."""
    adj = [set() for _ in range(n_verts)]
    for a, b in unique_edges(np.asarray(triangles)):
        adj[a].add(int(b))
        adj[b].add(int(a))
    dist = {start: 0}
    frontier = [start]
    for d in range(1, k + 1):
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in dist:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return sorted(v for v, d in dist.items() if 1 <= d <= k)


def _signed_volume(vertices, triangles):
    """Divergence-theorem volume of a closed mesh."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return float(np.einsum("ij,ij->", a, np.cross(b, c)) / 6.0)


# ---------------------------------------------------------------------------
# sample_bezier


def test_bezier_endpoints_and_midpoint():
    pts = sample_bezier((0, 0), (1, 0), (2, 0), 3)
    assert np.allclose(pts, [[0, 0], [1, 0], [2, 0]], atol=1e-12)


def test_bezier_symmetric_arch_midpoint():
    pts = sample_bezier((0, 0), (1, 2), (2, 0), 5)
    assert np.allclose(pts[2], [1.0, 1.0], atol=1e-12)
    assert np.allclose(pts[0], [0, 0], atol=1e-12)
    assert np.allclose(pts[-1], [2, 0], atol=1e-12)


def test_bezier_collinear_control_stays_on_segment():
    pts = sample_bezier((0, 0), (0.5, 0.5), (1, 1), 17)
    assert np.allclose(pts[:, 0], pts[:, 1], atol=1e-12)
    assert pts[:, 0].min() >= -1e-12 and pts[:, 0].max() <= 1 + 1e-12


def test_bezier_chord_length_converges_to_quadrature():
    p0, p1, p2 = (0, 0), (0.7, 1.3), (2, 0.4)
    expected = _bezier_arc_length(p0, p1, p2)
    pts = sample_bezier(p0, p1, p2, 2000)
    chord = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
    assert chord == pytest.approx(expected, rel=1e-5)
    assert chord <= expected + 1e-12  # chords underestimate arc length


def test_bezier_rejects_too_few_samples():
    with pytest.raises(ValueError):
        sample_bezier((0, 0), (1, 1), (2, 0), 1)


# ---------------------------------------------------------------------------
# round_corner


def test_round_corner_right_angle_known_geometry():
    # corner at origin, arms along +y and +x, radius 0.5: tangent points at
    # (0, 0.5) and (0.5, 0), arc centered on (0.5, 0.5)
    arc = round_corner((0, 1), (0, 0), (1, 0), 0.5, 9)
    assert np.allclose(arc[0], [0, 0.5], atol=1e-9)
    assert np.allclose(arc[-1], [0.5, 0], atol=1e-9)
    center = np.array([0.5, 0.5])
    radii = np.linalg.norm(arc - center, axis=1)
    assert np.allclose(radii, 0.5, atol=1e-9)


def test_round_corner_zero_radius_returns_corner():
    arc = round_corner((0, 1), (0, 0), (1, 0), 0.0, 5)
    assert arc.shape == (1, 2)
    assert np.allclose(arc[0], [0, 0])


def test_round_corner_oblique_matches_analytic_center():
    rng = np.random.default_rng(7)
    for _ in range(50):
        corner = rng.uniform(-1, 1, 2)
        a1 = rng.uniform(0, 2 * np.pi)
        # keep the wedge angle comfortably away from 0 and pi
        dphi = rng.uniform(0.4, np.pi - 0.4)
        a2 = a1 + dphi
        l1, l2 = rng.uniform(0.5, 2.0, 2)
        prev = corner + l1 * np.array([np.cos(a1), np.sin(a1)])
        nxt = corner + l2 * np.array([np.cos(a2), np.sin(a2)])
        r = rng.uniform(0.01, 0.3) * min(l1, l2) * np.tan(dphi / 2)
        arc = round_corner(prev, corner, nxt, r, 7)
        # analytic center: along the bisector at distance r / sin(phi/2)
        bis = (prev - corner) / l1 + (nxt - corner) / l2
        bis /= np.linalg.norm(bis)
        center = corner + (r / np.sin(dphi / 2)) * bis
        assert np.allclose(np.linalg.norm(arc - center, axis=1), r, atol=1e-9)
        # arc endpoints lie on the two arms
        for pt, arm_end in ((arc[0], prev), (arc[-1], nxt)):
            t = np.dot(pt - corner, arm_end - corner) / np.dot(
                arm_end - corner, arm_end - corner
            )
            proj = corner + t * (arm_end - corner)
            assert np.linalg.norm(proj - pt) < 1e-9
            assert -1e-12 < t < 1.0


def test_round_corner_radius_too_large():
    with pytest.raises(ValueError):
        round_corner((0, 0.1), (0, 0), (1, 0), 0.5, 5)


def test_round_corner_rejects_collinear():
    with pytest.raises(ValueError):
        round_corner((-1, 0), (0, 0), (1, 0), 0.1, 5)


def test_round_corner_negative_radius():
    with pytest.raises(ValueError):
        round_corner((0, 1), (0, 0), (1, 0), -0.1, 5)


# ---------------------------------------------------------------------------
# ring_neighbors


def _strip_mesh(rows, cols):
    """Regular grid mesh, each cell split into two triangles."""
    xs, ys = np.meshgrid(np.arange(cols), np.arange(rows))
    verts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(rows * cols)]).astype(float)
    tris = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            i = r * cols + c
            tris.append([i, i + 1, i + cols])
            tris.append([i + 1, i + cols + 1, i + cols])
    uvs = verts[:, :2] / [max(cols - 1, 1), max(rows - 1, 1)]
    return ClothMesh(verts, np.array(tris), uvs)


def test_ring1_single_triangle():
    mesh = ClothMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),
        np.array([[0, 1, 2]]),
        np.zeros((3, 2)),
    )
    assert ring_neighbors(mesh, 0, 1).tolist() == [1, 2]
    assert ring_neighbors(mesh, 0, 2).tolist() == [1, 2]


def test_rings_match_bfs_on_grid():
    mesh = _strip_mesh(5, 7)
    for v in range(mesh.num_vertices):
        for k in (1, 2):
            got = ring_neighbors(mesh, v, k).tolist()
            assert got == _bfs_ring(mesh.triangles, mesh.num_vertices, v, k)


def test_ring1_contained_in_ring2():
    mesh = _strip_mesh(4, 4)
    for v in range(mesh.num_vertices):
        r1 = set(ring_neighbors(mesh, v, 1).tolist())
        r2 = set(ring_neighbors(mesh, v, 2).tolist())
        assert r1 <= r2
        assert v not in r1 and v not in r2


def test_ring_rejects_bad_arguments():
    mesh = _strip_mesh(2, 2)
    with pytest.raises(ValueError):
        ring_neighbors(mesh, 0, 3)
    with pytest.raises(ValueError):
        ring_neighbors(mesh, 99, 1)


# ---------------------------------------------------------------------------
# solidify


def test_solidify_single_triangle_counts():
    mesh = ClothMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),
        np.array([[0, 1, 2]]),
        np.zeros((3, 2)),
    )
    solid = solidify(mesh, 0.01)
    assert solid.num_vertices == 6
    assert solid.num_triangles == 8  # 1 top + 1 bottom + 3 boundary edges * 2


def test_solidify_watertight_and_volume():
    mesh = _strip_mesh(6, 6)
    mesh = ClothMesh(mesh.vertices * 0.1, mesh.triangles, mesh.uvs)
    t = 0.004
    solid = solidify(mesh, t)
    _, counts = edge_use_counts(solid.triangles)
    assert (counts == 2).all()
    surface = float(triangle_areas(mesh.vertices, mesh.triangles).sum())
    vol = _signed_volume(solid.vertices, solid.triangles)
    assert vol == pytest.approx(surface * t, rel=0.05)


def test_solidify_keypoints_and_top_offset():
    mesh = _strip_mesh(3, 3)
    mesh.keypoint_vertices = {"a": 0, "b": 8}
    solid = solidify(mesh, 0.2)
    assert solid.keypoint_vertices == {"a": 0, "b": 8}
    # flat grid: every normal is +z, so the top copy sits t/2 above
    assert np.allclose(solid.vertices[:9, 2], 0.1, atol=1e-12)
    assert np.allclose(solid.vertices[9:, 2], -0.1, atol=1e-12)


def test_solidify_rejects_closed_and_bad_thickness():
    mesh = _strip_mesh(3, 3)
    with pytest.raises(ValueError):
        solidify(mesh, 0.0)
    solid = solidify(mesh, 0.1)
    with pytest.raises(ValueError):
        solidify(solid, 0.1)  # already closed, no boundary


def test_vertex_normals_flat_grid_point_up():
    mesh = _strip_mesh(4, 5)
    n = vertex_normals(mesh.vertices, mesh.triangles)
    assert np.allclose(n, [0, 0, 1], atol=1e-12)


def test_mesh_validate_catches_bad_indices():
    with pytest.raises(ValueError):
        ClothMesh(
            np.zeros((3, 3)), np.array([[0, 1, 5]]), np.zeros((3, 2))
        ).validate()
