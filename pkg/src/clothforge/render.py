"""Minimal raytracer and the geometric queries behind annotations.

One primary ray per pixel center against a scene BVH; shading is
albedo x (ambient + sum of max(0, n.l) x intensity), with a shadow ray per
light.  Misses take the background color.  Object ids are fixed: 0 is the
ground plane, 1 the cloth, 2+ the distractors in order, which also settles
tie-breaks for coincident hits.

The segmentation mask and the 2-ring keypoint visibility rule reuse the same
BVH, so annotations are exactly consistent with the rendered geometry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .bvh import Bvh, anyhit_batch, build_bvh, raycast_batch
from .geometry import ClothMesh, ring_neighbors
from .materials import Material, UniformColor
from .scene import Camera, Scene, distractor_mesh, plane_mesh

PLANE_OBJECT = 0
CLOTH_OBJECT = 1

RAY_EPSILON = 1e-5  # m, self-intersection offset along secondary rays


@dataclass
class SceneGeometry:
    """BVH plus per-triangle shading data, indexed by global triangle id."""

    bvh: Bvh
    materials: list[Material]  # by object id
    tri_offsets: np.ndarray  # (num_objects + 1,), start of each object's tris
    normals: np.ndarray  # (T, 3) unit geometric normals
    uv_corners: np.ndarray  # (T, 3, 2)

    def global_tri(self, object_id: np.ndarray, tri: np.ndarray) -> np.ndarray:
        return self.tri_offsets[object_id] + tri


def build_scene_geometry(scene: Scene) -> SceneGeometry:
    pv, pt, puv = plane_mesh(scene)
    soups = [(pv[pt], puv[pt], scene.plane_material)]

    cloth = scene.cloth_mesh
    soups.append((cloth.vertices[cloth.triangles],
                  cloth.uvs[cloth.triangles], scene.cloth_material))

    for d in scene.distractors:
        dv, dt = distractor_mesh(d, scene.plane_center[2])
        soups.append((dv[dt], np.zeros((len(dt), 3, 2)), UniformColor(d.rgb)))

    tris, uvs, materials, offsets = [], [], [], [0]
    for soup_tris, soup_uvs, material in soups:
        tris.append(soup_tris)
        uvs.append(soup_uvs)
        materials.append(material)
        offsets.append(offsets[-1] + len(soup_tris))

    all_tris = np.concatenate(tris)
    ab = all_tris[:, 1] - all_tris[:, 0]
    ac = all_tris[:, 2] - all_tris[:, 0]
    n = np.cross(ab, ac)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    norm[norm == 0.0] = 1.0
    return SceneGeometry(
        bvh=build_bvh([(i, t) for i, t in enumerate(tris)]),
        materials=materials,
        tri_offsets=np.array(offsets, dtype=np.int64),
        normals=n / norm,
        uv_corners=np.concatenate(uvs),
    )


def _primary_hits(scene: Scene, geometry: SceneGeometry):
    """Trace one ray per pixel center; returns flat hit arrays plus ray data."""
    cam = scene.camera
    dirs = cam.ray_directions().reshape(-1, 3)
    origins = np.broadcast_to(np.asarray(cam.position), dirs.shape)
    t, obj, tri, u, v = raycast_batch(
        geometry.bvh, origins, dirs, np.full(len(dirs), np.inf))
    return t, obj, tri, u, v, origins, dirs


def quantize(color: np.ndarray) -> np.ndarray:
    """Linear [0, 1] floats to 8-bit, rounding half away from zero."""
    return np.clip(np.round(np.clip(color, 0.0, 1.0) * 255.0), 0, 255).astype(
        np.uint8)


def render(scene: Scene, geometry: SceneGeometry | None = None) -> np.ndarray:
    """Render to an (H, W, 3) uint8 image."""
    scene.validate()
    if geometry is None:
        geometry = build_scene_geometry(scene)
    w, h = scene.camera.intrinsics.resolution
    t, obj, tri, u, v, origins, dirs = _primary_hits(scene, geometry)

    color = np.empty((h * w, 3))
    color[:] = scene.background_rgb
    hit = obj >= 0
    if hit.any():
        gt = geometry.global_tri(obj[hit], tri[hit])
        normals = geometry.normals[gt].copy()
        front = (normals * dirs[hit]).sum(axis=1) > 0.0
        normals[front] = -normals[front]  # face the camera

        corners = geometry.uv_corners[gt]
        bu = u[hit][:, None]
        bv = v[hit][:, None]
        uv = (1.0 - bu - bv) * corners[:, 0] + bu * corners[:, 1] \
            + bv * corners[:, 2]

        albedo = np.empty((hit.sum(), 3))
        obj_hit = obj[hit]
        for oid, material in enumerate(geometry.materials):
            sel = obj_hit == oid
            if sel.any():
                albedo[sel] = material.albedo(uv[sel, 0], uv[sel, 1])

        points = origins[hit] + t[hit][:, None] * dirs[hit]
        light_sum = np.full((hit.sum(), 3), scene.ambient)
        for light in scene.lights:
            ldir = np.asarray(light.direction)
            ndotl = normals @ ldir
            lit = ndotl > 0.0
            if not lit.any():
                continue
            shadow_origins = points[lit] + RAY_EPSILON * ldir
            shadow_dirs = np.broadcast_to(ldir, shadow_origins.shape)
            occluded = anyhit_batch(geometry.bvh, shadow_origins, shadow_dirs,
                                    np.full(len(shadow_origins), np.inf))
            contribution = np.zeros((hit.sum(), 3))
            contribution[lit] = (ndotl[lit, None]
                                 * np.asarray(light.intensity)[None, :])
            contribution[np.nonzero(lit)[0][occluded]] = 0.0
            light_sum += contribution

        color[hit] = albedo * light_sum
    return quantize(color).reshape(h, w, 3)


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    """Tight (x, y, w, h) box of set pixels, or None for an empty mask."""
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return None
    x0 = int(xs.min())
    y0 = int(ys.min())
    return (x0, y0, int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1)


def visible_mask(scene: Scene, geometry: SceneGeometry | None = None
                 ) -> tuple[np.ndarray, tuple[int, int, int, int] | None]:
    """Boolean (H, W) mask of pixels whose nearest hit is the cloth, plus its
    tight bounding box (None when the cloth is entirely hidden)."""
    scene.validate()
    if geometry is None:
        geometry = build_scene_geometry(scene)
    w, h = scene.camera.intrinsics.resolution
    _, obj, _, _, _, _, _ = _primary_hits(scene, geometry)
    mask = (obj == CLOTH_OBJECT).reshape(h, w)
    return mask, mask_bbox(mask)


def keypoint_visibility(geometry: SceneGeometry, camera: Camera,
                        mesh: ClothMesh, name: str) -> bool:
    """2-ring visibility: true iff any vertex within graph distance two of
    the keypoint vertex(or the vertex itself) projects inside the image with
    positive depth and has an unobstructed line to the camera."""
    if name not in mesh.keypoint_vertices:
        raise KeyError(f"mesh has no keypoint {name!r}")
    kp = mesh.keypoint_vertices[name]
    witnesses = np.concatenate([[kp], ring_neighbors(mesh, kp, 2)])
    points = mesh.vertices[witnesses]

    pixels, depth = camera.project(points)
    w, h = camera.intrinsics.resolution
    in_view = ((depth > 0.0)
               & (pixels[:, 0] >= 0.0) & (pixels[:, 0] < w)
               & (pixels[:, 1] >= 0.0) & (pixels[:, 1] < h))
    if not in_view.any():
        return False

    candidates = points[in_view]
    origin = np.asarray(camera.position)
    rel = candidates - origin
    dist = np.linalg.norm(rel, axis=1)
    dirs = rel / dist[:, None]
    origins = np.broadcast_to(origin, dirs.shape)
    occluded = anyhit_batch(geometry.bvh, origins, dirs, dist - RAY_EPSILON)
    return bool((~occluded).any())


def save_png(image: np.ndarray, path) -> None:
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("image must be (H, W, 3) uint8")
    PILImage.fromarray(image, mode="RGB").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    with PILImage.open(path) as img:
        return np.asarray(img.convert("RGB"))
