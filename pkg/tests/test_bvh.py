"""BVH construction invariants and raycast equivalence with brute force."""
from __future__ import annotations

import numpy as np
import pytest

from clothforge.bvh import Bvh, Hit, Ray, anyhit_batch, build_bvh, raycast, raycast_batch


def _brute_force_hit(objects, origin, direction, t_max=np.inf):
    """Reference nearest-hit: scan all triangles in (object, index) order,
    Moller-Trumbore with inclusive boundaries, 0 < t <= t_max."""
    best = None
    for obj_id, tris in objects:
        for k, tri in enumerate(np.asarray(tris, dtype=float)):
            a, b, c = tri
            ab = b - a
            ac = c - a
            p = np.cross(direction, ac)
            det = np.dot(ab, p)
            if abs(det) < 1e-14:
                continue
            inv = 1.0 / det
            tv = origin - a
            u = np.dot(tv, p) * inv
            if u < -1e-9 or u > 1 + 1e-9:
                continue
            q = np.cross(tv, ab)
            v = np.dot(direction, q) * inv
            if v < -1e-9 or u + v > 1 + 1e-9:
                continue
            t = np.dot(ac, q) * inv
            if t <= 0.0 or t > t_max:
                continue
            if best is None or t < best[0]:
                best = (t, obj_id, k, u, v)
    return best


def _random_soup(rng, n_tris, n_objects=3, scale=1.0):
    objects = []
    per = n_tris // n_objects
    for i in range(n_objects):
        centers = rng.uniform(-scale, scale, (per, 1, 3))
        tris = centers + rng.uniform(-0.3 * scale, 0.3 * scale, (per, 3, 3))
        objects.append((i, tris))
    return objects


def _walk_containment(bvh: Bvh):
    """Every leaf's primitives lie inside its node box; every child box lies
    inside its parent box."""
    lo = np.minimum(np.minimum(bvh.tri_a, bvh.tri_a + bvh.tri_ab), bvh.tri_a + bvh.tri_ac)
    hi = np.maximum(np.maximum(bvh.tri_a, bvh.tri_a + bvh.tri_ab), bvh.tri_a + bvh.tri_ac)
    seen = np.zeros(bvh.num_primitives, dtype=int)
    stack = [0]
    while stack:
        n = stack.pop()
        if bvh.node_count[n] > 0 or bvh.node_left[n] < 0:
            s, c = bvh.node_start[n], bvh.node_count[n]
            for p in range(s, s + c):
                assert (lo[p] >= bvh.node_min[n] - 1e-12).all()
                assert (hi[p] <= bvh.node_max[n] + 1e-12).all()
                seen[p] += 1
        else:
            for child in (bvh.node_left[n], bvh.node_right[n]):
                assert (bvh.node_min[child] >= bvh.node_min[n] - 1e-12).all()
                assert (bvh.node_max[child] <= bvh.node_max[n] + 1e-12).all()
                stack.append(child)
    assert (seen == 1).all()


def test_single_triangle_is_root_leaf():
    tri = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], dtype=float)
    bvh = build_bvh([(7, tri)])
    assert bvh.node_left[0] == -1
    assert bvh.node_count[0] == 1
    assert np.allclose(bvh.node_min[0], [0, 0, 0])
    assert np.allclose(bvh.node_max[0], [1, 1, 0])


def test_containment_and_partition():
    rng = np.random.default_rng(11)
    bvh = build_bvh(_random_soup(rng, 3000))
    _walk_containment(bvh)
    # reordering is a permutation: each (object, index) appears exactly once
    pairs = set(zip(bvh.object_ids.tolist(), bvh.triangle_indices.tolist()))
    assert len(pairs) == bvh.num_primitives


def test_axis_aligned_hit():
    tri = np.array([[[0, 0, 1], [1, 0, 1], [0, 1, 1]]], dtype=float)
    bvh = build_bvh([(0, tri)])
    hit = raycast(bvh, Ray((0.2, 0.2, 0.0), (0.0, 0.0, 1.0)))
    assert hit is not None
    assert hit.t == pytest.approx(1.0, abs=1e-12)
    assert hit.object_id == 0 and hit.triangle_index == 0
    assert hit.u == pytest.approx(0.2, abs=1e-9)
    assert hit.v == pytest.approx(0.2, abs=1e-9)


def test_miss_and_tmax_cut():
    tri = np.array([[[0, 0, 1], [1, 0, 1], [0, 1, 1]]], dtype=float)
    bvh = build_bvh([(0, tri)])
    assert raycast(bvh, Ray((0.2, 0.2, 0.0), (0.0, 0.0, -1.0))) is None
    assert raycast(bvh, Ray((0.2, 0.2, 0.0), (0.0, 0.0, 1.0)), t_max=0.5) is None
    # inclusive: t exactly equal to t_max still hits
    hit = raycast(bvh, Ray((0.2, 0.2, 0.0), (0.0, 0.0, 1.0)), t_max=1.0)
    assert hit is not None


def test_edge_and_vertex_hits_count():
    tri = np.array([[[0, 0, 1], [1, 0, 1], [0, 1, 1]]], dtype=float)
    bvh = build_bvh([(0, tri)])
    for target in [(0, 0), (1, 0), (0, 1), (0.5, 0.0), (0.5, 0.5)]:
        hit = raycast(bvh, Ray((target[0], target[1], 0.0), (0.0, 0.0, 1.0)))
        assert hit is not None, target


def test_behind_origin_ignored():
    tri = np.array([[[0, 0, -1], [1, 0, -1], [0, 1, -1]]], dtype=float)
    bvh = build_bvh([(0, tri)])
    assert raycast(bvh, Ray((0.2, 0.2, 0.0), (0.0, 0.0, 1.0))) is None


def test_matches_brute_force_random():
    rng = np.random.default_rng(23)
    objects = _random_soup(rng, 600)
    bvh = build_bvh(objects)
    n = 500
    origins = rng.uniform(-2, 2, (n, 3))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    t, obj, tri, u, v = raycast_batch(bvh, origins, dirs, np.full(n, np.inf))
    hits = 0
    for i in range(n):
        ref = _brute_force_hit(objects, origins[i], dirs[i])
        if ref is None:
            assert obj[i] == -1
        else:
            hits += 1
            assert obj[i] == ref[1] and tri[i] == ref[2]
            assert t[i] == pytest.approx(ref[0], rel=1e-9)
            assert u[i] == pytest.approx(ref[3], abs=1e-9)
            assert v[i] == pytest.approx(ref[4], abs=1e-9)
    assert hits > 50  # the scene is dense enough for the test to mean something


def test_anyhit_matches_nearest_hit_presence():
    rng = np.random.default_rng(5)
    objects = _random_soup(rng, 300)
    bvh = build_bvh(objects)
    n = 300
    origins = rng.uniform(-2, 2, (n, 3))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    lim = rng.uniform(0.5, 4.0, n)
    occluded = anyhit_batch(bvh, origins, dirs, lim)
    t, obj, _, _, _ = raycast_batch(bvh, origins, dirs, lim.copy())
    assert np.array_equal(occluded, obj >= 0)


def test_empty_soup():
    bvh = build_bvh([(0, np.empty((0, 3, 3)))])
    assert raycast(bvh, Ray((0, 0, 0), (0, 0, 1))) is None
    assert not anyhit_batch(bvh, np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]),
                            np.array([np.inf]))[0]


def test_build_deterministic():
    rng = np.random.default_rng(2)
    objects = _random_soup(rng, 200)
    b1 = build_bvh(objects)
    b2 = build_bvh(objects)
    assert np.array_equal(b1.node_min, b2.node_min)
    assert np.array_equal(b1.object_ids, b2.object_ids)
    assert np.array_equal(b1.triangle_indices, b2.triangle_indices)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        build_bvh([(0, np.zeros((2, 3)))])
    with pytest.raises(ValueError):
        build_bvh([(0, np.full((1, 3, 3), np.nan))])
