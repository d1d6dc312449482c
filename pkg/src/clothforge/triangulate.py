"""Triangulation of simple polygons with a hard maximum-edge-length bound.

The pipeline feeds garment outlines (possibly hundreds of nearly-collinear
boundary samples) through :func:`triangulate` to get simulation-ready meshes.

Fast path: subdivide boundary edges to the target spacing, scatter a jittered
hexagonal lattice of interior points with a clearance band, Delaunay-
triangulate the whole point set (scipy/qhull), keep triangles whose centroid
lies inside the polygon, and verify that every boundary segment survived as a
triangulation edge.  When that verification fails (thin necks, pathological
notches) we fall back to ear clipping plus Lawson flips.  Either way, a final
midpoint-split/flip/smooth stage enforces the edge bound exactly.

Boundary input vertices keep their indices (0..n-1), which lets callers carry
named anchor vertices through triangulation.  Everything is deterministic:
identical input produces identical output.
"""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .geometry import (
    ClothMesh,
    boundary_edges,
    polygon_is_simple,
    polygon_signed_area,
)

_AREA_EPS = 1e-14
_INCIRCLE_EPS = 1e-14
_LATTICE_SPACING = 0.92  # lattice pitch as a fraction of max_edge
# boundary segments are at most max_edge long, so vertex distance >= 0.9 h
# guarantees segment distance >= 0.4 h
_CLEARANCE = 0.9
_JITTER = 0.04  # lattice jitter amplitude as a fraction of max_edge


class _FallbackNeeded(Exception):
    pass


def triangulate(boundary: np.ndarray, max_edge: float) -> ClothMesh:
    """Triangulate the interior of a CCW simple polygon.

    Returns a planar ClothMesh (z = 0) whose first ``len(boundary)`` vertices
    are exactly the polygon vertices in input order, whose triangles are all
    CCW with positive area, and whose edges are all <= max_edge.  UVs are the
    vertex coordinates normalized per-axis into [0, 1].

    Raises ValueError for non-simple, clockwise or degenerate input, or a
    non-positive max_edge.
    """
    poly = np.asarray(boundary, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
        raise ValueError(f"boundary must be (n >= 3, 2), got {poly.shape}")
    if not np.isfinite(poly).all():
        raise ValueError("boundary contains non-finite values")
    if max_edge <= 0.0:
        raise ValueError("max_edge must be positive")
    if polygon_signed_area(poly) <= _AREA_EPS:
        raise ValueError("boundary must be counter-clockwise with positive area")
    if not polygon_is_simple(poly):
        raise ValueError("boundary is self-intersecting or degenerate")

    pts, ring = _subdivide_boundary(poly, max_edge)
    try:
        pts, tris = _lattice_delaunay(pts, ring, max_edge)
    except (_FallbackNeeded, QhullError):
        ring_tris = _ear_clip(pts[ring])
        tris = ring[ring_tris]
        tris = _lawson_flips(pts, tris)

    pts, tris = _refine(pts, tris, max_edge)
    fixed = np.zeros(pts.shape[0], dtype=bool)
    fixed[np.unique(boundary_edges(tris))] = True
    pts = _smooth(pts, tris, fixed)
    pts, tris = _batched_flips(pts, tris)
    # smoothing and flips may each stretch an edge past the bound again;
    # these last splits run without smoothing so the bound is final
    pts, tris = _refine(pts, tris, max_edge, flip=False)

    lo = pts.min(axis=0)
    extent = np.maximum(pts.max(axis=0) - lo, 1e-300)
    uvs = (pts - lo) / extent

    mesh = ClothMesh(
        np.column_stack([pts, np.zeros(pts.shape[0])]),
        tris.astype(np.int32),
        uvs,
    )
    mesh.validate()
    return mesh


# ---------------------------------------------------------------------------
# fast path: boundary subdivision + interior lattice + qhull


def _subdivide_boundary(poly: np.ndarray, max_edge: float):
    """Insert evenly spaced points on polygon edges longer than max_edge.

    Returns (points, ring): original vertices first, inserted points after,
    and ``ring`` listing point indices in boundary loop order.
    """
    n = poly.shape[0]
    extra: list[np.ndarray] = []
    ring: list[int] = []
    next_id = n
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        ring.append(i)
        k = int(np.ceil(np.linalg.norm(b - a) / max_edge))
        if k > 1:
            t = (np.arange(1, k) / k)[:, None]
            extra.append(a + t * (b - a))
            ring.extend(range(next_id, next_id + k - 1))
            next_id += k - 1
    pts = np.vstack([poly] + extra) if extra else poly.copy()
    return pts, np.array(ring, dtype=np.int64)


def _hex_lattice(lo: np.ndarray, hi: np.ndarray, max_edge: float) -> np.ndarray:
    """Jittered hexagonal lattice covering [lo, hi]; jitter breaks the exact
    cocircularity that would otherwise make Delaunay ties arbitrary."""
    pitch = _LATTICE_SPACING * max_edge
    dy = pitch * np.sqrt(3.0) / 2.0
    ny = max(int(np.ceil((hi[1] - lo[1]) / dy)), 0)
    nx = max(int(np.ceil((hi[0] - lo[0]) / pitch)) + 1, 0)
    if nx == 0 or ny == 0:
        return np.empty((0, 2))
    rows = lo[1] + dy * (0.5 + np.arange(ny))
    cols = lo[0] + pitch * np.arange(nx)
    xx = np.tile(cols, (ny, 1))
    xx[1::2] += 0.5 * pitch
    yy = np.tile(rows[:, None], (1, nx))
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    rng = np.random.default_rng(0x7C1A)  # fixed: triangulation is a pure function
    pts += rng.uniform(-_JITTER, _JITTER, pts.shape) * max_edge
    return pts


def _lattice_delaunay(pts: np.ndarray, ring: np.ndarray, max_edge: float):
    """Delaunay triangulation of boundary + interior lattice points, filtered
    to the polygon interior.  Raises _FallbackNeeded when any boundary segment
    is not an edge of the triangulation.

    No point-in-polygon tests are required: lattice points are only kept away
    from the boundary (convex-hull pockets get triangulated and then removed),
    and interior selection is a flood fill over the simplex adjacency graph
    that never crosses a boundary segment.
    """
    ring_poly = pts[ring]
    lat = _hex_lattice(ring_poly.min(axis=0), ring_poly.max(axis=0), max_edge)
    if lat.shape[0]:
        # vertex distance bounds segment distance because ring spacing <= max_edge
        dist, _ = cKDTree(ring_poly).query(lat)
        lat = lat[dist >= _CLEARANCE * max_edge]
    allpts = np.vstack([pts, lat]) if lat.shape[0] else pts

    tri = Delaunay(allpts)
    tris = tri.simplices.astype(np.int64)
    neighbors = tri.neighbors
    if tris.shape[0] == 0:
        raise _FallbackNeeded

    big = allpts.shape[0] + 1
    ra, rb = ring, np.roll(ring, -1)
    ring_keys = np.minimum(ra, rb) * big + np.maximum(ra, rb)
    ring_key_set = set(ring_keys.tolist())
    tri_edge_keys = np.empty((tris.shape[0], 3), dtype=np.int64)
    for k in range(3):
        # edge opposite local vertex k
        a = tris[:, (k + 1) % 3]
        b = tris[:, (k + 2) % 3]
        tri_edge_keys[:, k] = np.minimum(a, b) * big + np.maximum(a, b)
    # every boundary segment must appear, otherwise the interior flood fill
    # below would leak and the polygon would not be reproduced exactly
    present = np.isin(ring_keys, np.unique(tri_edge_keys))
    if not present.all():
        raise _FallbackNeeded
    is_ring_edge = np.isin(tri_edge_keys, ring_keys)

    # flood the exterior starting from hull-adjacent simplices reached across
    # non-boundary edges; what is never reached is the polygon interior
    exterior = np.zeros(tris.shape[0], dtype=bool)
    stack = list(np.nonzero((neighbors == -1) & ~is_ring_edge)[0])
    exterior[stack] = True
    while stack:
        t = stack.pop()
        for k in range(3):
            n = neighbors[t, k]
            if n >= 0 and not exterior[n] and not is_ring_edge[t, k]:
                exterior[n] = True
                stack.append(n)
    tris = tris[~exterior]
    if tris.shape[0] == 0:
        raise _FallbackNeeded

    a = allpts[tris[:, 0]]
    b = allpts[tris[:, 1]]
    c = allpts[tris[:, 2]]
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    if (np.abs(area2) <= _AREA_EPS).any():
        raise _FallbackNeeded
    flip = area2 < 0
    tris[flip] = tris[flip][:, ::-1]
    # the kept triangles must tile the polygon exactly
    poly_area = polygon_signed_area(ring_poly)
    if abs(float(np.abs(area2).sum()) * 0.5 - poly_area) > 1e-9 * poly_area:
        raise _FallbackNeeded

    # drop lattice points that ended up unused (all their faces were outside)
    used = np.zeros(allpts.shape[0], dtype=bool)
    used[tris.ravel()] = True
    used[: pts.shape[0]] = True
    remap = np.cumsum(used) - 1
    return allpts[used], remap[tris]


# ---------------------------------------------------------------------------
# fallback: ear clipping


def _corner_cross(pts, prv, nxt, i):
    a, b, c = pts[prv[i]], pts[i], pts[nxt[i]]
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _ear_clip(pts: np.ndarray) -> np.ndarray:
    """O(n^2) ear clipping of a CCW simple polygon."""
    n = pts.shape[0]
    if n == 3:
        return np.array([[0, 1, 2]], dtype=np.int64)
    idx = np.arange(n)
    nxt = np.roll(idx, -1)
    prv = np.roll(idx, 1)
    cross = np.array([_corner_cross(pts, prv, nxt, i) for i in range(n)])
    convex = cross > _AREA_EPS
    reflex = cross < -_AREA_EPS

    def ear_ok(i):
        """No reflex vertex strictly inside the candidate ear (a, b, c)."""
        blockers = np.nonzero(reflex)[0]
        blockers = blockers[(blockers != prv[i]) & (blockers != i) & (blockers != nxt[i])]
        if blockers.size == 0:
            return True
        a, b, c = pts[prv[i]], pts[i], pts[nxt[i]]
        p = pts[blockers]
        s1 = (b[0] - a[0]) * (p[:, 1] - a[1]) - (b[1] - a[1]) * (p[:, 0] - a[0])
        s2 = (c[0] - b[0]) * (p[:, 1] - b[1]) - (c[1] - b[1]) * (p[:, 0] - b[0])
        s3 = (a[0] - c[0]) * (p[:, 1] - c[1]) - (a[1] - c[1]) * (p[:, 0] - c[0])
        inside = (s1 > _AREA_EPS) & (s2 > _AREA_EPS) & (s3 > _AREA_EPS)
        return not inside.any()

    tris = []
    remaining = n
    cursor = 0
    while remaining > 3:
        found = -1
        i = cursor
        for _ in range(remaining):
            if convex[i] and ear_ok(i):
                found = i
                break
            i = nxt[i]
        if found < 0:
            raise ValueError("ear clipping stalled; polygon is numerically degenerate")
        i = found
        tris.append((prv[i], i, nxt[i]))
        p, q = prv[i], nxt[i]
        nxt[p] = q
        prv[q] = p
        remaining -= 1
        for j in (p, q):
            cj = _corner_cross(pts, prv, nxt, j)
            convex[j] = cj > _AREA_EPS
            reflex[j] = cj < -_AREA_EPS
        cursor = p
    a = cursor
    tris.append((a, nxt[a], nxt[nxt[a]]))
    return np.array(tris, dtype=np.int64)


# ---------------------------------------------------------------------------
# Delaunay flips


def _incircle(pa, pb, pc, pd):
    """> 0 when pd lies strictly inside the circumcircle of CCW (pa, pb, pc)."""
    adx, ady = pa[0] - pd[0], pa[1] - pd[1]
    bdx, bdy = pb[0] - pd[0], pb[1] - pd[1]
    cdx, cdy = pc[0] - pd[0], pc[1] - pd[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )


def _orient2d(pa, pb, pc):
    return (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])


def _lawson_flips(pts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Queue-based Lawson flips on a small triangulation.

    Boundary edges have a single incident triangle and are therefore never
    flipped, which is exactly the constrained-Delaunay behaviour needed for
    a polygon triangulation.
    """
    tri_list = [tuple(int(v) for v in t) for t in tris]
    edge_tris: dict[tuple[int, int], set[int]] = {}

    def edge_key(a, b):
        return (a, b) if a < b else (b, a)

    def register(tid):
        t = tri_list[tid]
        for k in range(3):
            edge_tris.setdefault(edge_key(t[k], t[(k + 1) % 3]), set()).add(tid)

    def unregister(tid):
        t = tri_list[tid]
        for k in range(3):
            edge_tris[edge_key(t[k], t[(k + 1) % 3])].discard(tid)

    for tid in range(len(tri_list)):
        register(tid)

    queue = deque(edge_tris.keys())
    queued = set(queue)
    flips_left = 30 * len(tri_list) + 100
    while queue and flips_left > 0:
        e = queue.popleft()
        queued.discard(e)
        owners = edge_tris.get(e)
        if owners is None or len(owners) != 2:
            continue
        t1, t2 = sorted(owners)
        a, b = e
        # rotate t1 to (a, b, c); t2 holds the edge reversed, rotate to (b, a, d)
        v1 = tri_list[t1]
        v2 = tri_list[t2]
        if (a, b) not in ((v1[0], v1[1]), (v1[1], v1[2]), (v1[2], v1[0])):
            t1, t2 = t2, t1
            v1, v2 = v2, v1
        k1 = v1.index(a)
        c = v1[(k1 + 2) % 3]
        k2 = v2.index(b)
        if v2[(k2 + 1) % 3] != a:
            continue  # inconsistent orientation; leave untouched
        d = v2[(k2 + 2) % 3]
        if _incircle(pts[a], pts[b], pts[c], pts[d]) <= _INCIRCLE_EPS:
            continue
        if _orient2d(pts[a], pts[d], pts[c]) <= _AREA_EPS:
            continue
        if _orient2d(pts[d], pts[b], pts[c]) <= _AREA_EPS:
            continue
        unregister(t1)
        unregister(t2)
        tri_list[t1] = (a, d, c)
        tri_list[t2] = (d, b, c)
        register(t1)
        register(t2)
        flips_left -= 1
        for outer in (edge_key(a, d), edge_key(d, b), edge_key(b, c), edge_key(c, a)):
            if outer not in queued:
                queue.append(outer)
                queued.add(outer)
    return np.array(tri_list, dtype=np.int64)


def _interior_edge_pairs(tris: np.ndarray):
    """For each interior edge: (tri1, local1, tri2, local2), deterministic order."""
    t = tris.shape[0]
    keys = np.empty((t, 3), dtype=np.int64)
    big = int(tris.max()) + 2 if t else 2
    for k in range(3):
        a = tris[:, k]
        b = tris[:, (k + 1) % 3]
        keys[:, k] = np.minimum(a, b) * big + np.maximum(a, b)
    flat = keys.ravel()
    order = np.argsort(flat, kind="stable")
    sk = flat[order]
    same = sk[:-1] == sk[1:]
    first = np.nonzero(same)[0]
    e1 = order[first]
    e2 = order[first + 1]
    return e1 // 3, e1 % 3, e2 // 3, e2 % 3


def _batched_flips(pts: np.ndarray, tris: np.ndarray, rounds: int = 4):
    """Vectorized Delaunay flip rounds over an independent set of edges."""
    tris = tris.copy()
    for _ in range(rounds):
        t1, l1, t2, l2 = _interior_edge_pairs(tris)
        if t1.size == 0:
            break
        a = tris[t1, l1]
        b = tris[t1, (l1 + 1) % 3]
        c = tris[t1, (l1 + 2) % 3]
        d = tris[t2, (l2 + 2) % 3]
        # a,b reversed in t2 when orientation is consistent
        ok_orient = tris[t2, l2] == b
        pa, pb, pc, pd = pts[a], pts[b], pts[c], pts[d]
        adx, ady = pa[:, 0] - pd[:, 0], pa[:, 1] - pd[:, 1]
        bdx, bdy = pb[:, 0] - pd[:, 0], pb[:, 1] - pd[:, 1]
        cdx, cdy = pc[:, 0] - pd[:, 0], pc[:, 1] - pd[:, 1]
        ad = adx * adx + ady * ady
        bd = bdx * bdx + bdy * bdy
        cd = cdx * cdx + cdy * cdy
        det = (
            adx * (bdy * cd - bd * cdy)
            - ady * (bdx * cd - bd * cdx)
            + ad * (bdx * cdy - bdy * cdx)
        )
        o1 = (pd[:, 0] - pa[:, 0]) * (pc[:, 1] - pa[:, 1]) - (pd[:, 1] - pa[:, 1]) * (
            pc[:, 0] - pa[:, 0]
        )
        o2 = (pb[:, 0] - pd[:, 0]) * (pc[:, 1] - pd[:, 1]) - (pb[:, 1] - pd[:, 1]) * (
            pc[:, 0] - pd[:, 0]
        )
        want = ok_orient & (det > _INCIRCLE_EPS) & (o1 > _AREA_EPS) & (o2 > _AREA_EPS)
        cand = np.nonzero(want)[0]
        if cand.size == 0:
            break
        used = np.zeros(tris.shape[0], dtype=bool)
        chosen = []
        for ci in cand:
            i, j = t1[ci], t2[ci]
            if used[i] or used[j]:
                continue
            used[i] = used[j] = True
            chosen.append(ci)
        ch = np.array(chosen, dtype=np.int64)
        i, j = t1[ch], t2[ch]
        tris[i, 0], tris[i, 1], tris[i, 2] = a[ch], d[ch], c[ch]
        tris[j, 0], tris[j, 1], tris[j, 2] = d[ch], b[ch], c[ch]
    return pts, tris


# ---------------------------------------------------------------------------
# refinement


def _rotate_rows(tris: np.ndarray, r: np.ndarray) -> np.ndarray:
    cols = (r[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(tris, cols, axis=1)


def _split_pass(pts: np.ndarray, tris: np.ndarray, max_edge: float):
    """Split every edge longer than max_edge at its midpoint, rewriting each
    triangle according to how many of its edges were marked (1, 2 or 3)."""
    t = tris.shape[0]
    big = pts.shape[0] + 1
    keys = np.empty((t, 3), dtype=np.int64)
    for k in range(3):
        a = tris[:, k]
        b = tris[:, (k + 1) % 3]
        keys[:, k] = np.minimum(a, b) * big + np.maximum(a, b)
    uniq, inv = np.unique(keys.ravel(), return_inverse=True)
    ea = uniq // big
    eb = uniq % big
    lengths = np.linalg.norm(pts[ea] - pts[eb], axis=1)
    marked = lengths > max_edge
    n_marked = int(marked.sum())
    if n_marked == 0:
        return pts, tris, 0

    mid_id = np.full(uniq.shape[0], -1, dtype=np.int64)
    mid_id[marked] = pts.shape[0] + np.arange(n_marked)
    new_pts = np.vstack([pts, 0.5 * (pts[ea[marked]] + pts[eb[marked]])])

    tri_edge = inv.reshape(t, 3)
    m = marked[tri_edge]
    counts = m.sum(axis=1)
    out = [tris[counts == 0]]

    sel = counts == 1
    if sel.any():
        r = np.argmax(m[sel], axis=1)
        v = _rotate_rows(tris[sel], r)
        e = np.take_along_axis(tri_edge[sel], r[:, None], axis=1)[:, 0]
        mid = mid_id[e]
        out.append(np.stack([v[:, 0], mid, v[:, 2]], axis=1))
        out.append(np.stack([mid, v[:, 1], v[:, 2]], axis=1))

    sel = counts == 2
    if sel.any():
        u = np.argmin(m[sel], axis=1)  # the unmarked local edge
        r = (u + 1) % 3
        v = _rotate_rows(tris[sel], r)
        e = _rotate_rows(tri_edge[sel], r)
        m1 = mid_id[e[:, 0]]
        m2 = mid_id[e[:, 1]]
        out.append(np.stack([m1, v[:, 1], m2], axis=1))
        # split the leftover quad (a, m1, m2, c) along its shorter diagonal
        d_a_m2 = np.linalg.norm(new_pts[v[:, 0]] - new_pts[m2], axis=1)
        d_m1_c = np.linalg.norm(new_pts[m1] - new_pts[v[:, 2]], axis=1)
        use_am2 = d_a_m2 <= d_m1_c
        q = np.where(
            use_am2[:, None],
            np.stack([v[:, 0], m1, m2], axis=1),
            np.stack([v[:, 0], m1, v[:, 2]], axis=1),
        )
        q2 = np.where(
            use_am2[:, None],
            np.stack([v[:, 0], m2, v[:, 2]], axis=1),
            np.stack([m1, m2, v[:, 2]], axis=1),
        )
        out.append(q)
        out.append(q2)

    sel = counts == 3
    if sel.any():
        v = tris[sel]
        e = tri_edge[sel]
        mab = mid_id[e[:, 0]]
        mbc = mid_id[e[:, 1]]
        mca = mid_id[e[:, 2]]
        out.append(np.stack([v[:, 0], mab, mca], axis=1))
        out.append(np.stack([v[:, 1], mbc, mab], axis=1))
        out.append(np.stack([v[:, 2], mca, mbc], axis=1))
        out.append(np.stack([mab, mbc, mca], axis=1))

    return new_pts, np.vstack(out), n_marked


def _refine(pts: np.ndarray, tris: np.ndarray, max_edge: float, flip: bool = True):
    """Split passes (plus optional flip rounds) until all edges fit the bound.

    Midpoint splitting halves marked edges and creates cevians no longer than
    sqrt(3)/2 of the longest local edge, so the passes converge geometrically;
    the cap is a safety net, after which split-only passes finish the job.
    """
    for _ in range(64):
        pts, tris, n = _split_pass(pts, tris, max_edge)
        if n == 0:
            return pts, tris
        if flip:
            pts, tris = _batched_flips(pts, tris)
    while True:
        pts, tris, n = _split_pass(pts, tris, max_edge)
        if n == 0:
            return pts, tris


# ---------------------------------------------------------------------------
# smoothing


def _smooth(pts: np.ndarray, tris: np.ndarray, fixed: np.ndarray, rounds: int = 2,
            lam: float = 0.5) -> np.ndarray:
    """Laplacian smoothing of non-fixed vertices with an inversion guard:
    any move that would flip or flatten a triangle is reverted."""
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    n = pts.shape[0]
    pts = pts.copy()
    for _ in range(rounds):
        sums = np.zeros_like(pts)
        np.add.at(sums, e[:, 0], pts[e[:, 1]])
        np.add.at(sums, e[:, 1], pts[e[:, 0]])
        deg = np.bincount(e.ravel(), minlength=n).astype(np.float64)
        deg[deg == 0] = 1.0
        target = sums / deg[:, None]
        new = pts.copy()
        new[~fixed] = (1.0 - lam) * pts[~fixed] + lam * target[~fixed]
        for _fix in range(12):
            a = new[tris[:, 0]]
            b = new[tris[:, 1]]
            c = new[tris[:, 2]]
            area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
                c[:, 0] - a[:, 0]
            )
            bad = area2 < 1e-12
            if not bad.any():
                break
            bad_verts = np.unique(tris[bad])
            bad_verts = bad_verts[~fixed[bad_verts]]
            new[bad_verts] = pts[bad_verts]
        else:
            new = pts
        pts = new
    return pts
