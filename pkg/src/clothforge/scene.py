"""Scene composition: camera, lights, ground plane, distractors, cloth.

A scene is a pure value assembled from a deformed cloth mesh, a material
procedure and a random generator.  The camera sits on a spherical cap around
the cloth centroid and always looks at it.  Distractor primitives rest
exactly on the ground plane.  Scenes serialize to JSON (minus the cloth
geometry, which lives in its own mesh file) with stable key order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError
from .geometry import ClothMesh, solidify
from .materials import Material, material_from_dict, sample_material

_UP_FALLBACK = np.array([0.0, 1.0, 0.0])
_PLANE_CLEARANCE = 1e-4  # keeps the solidified underside off the plane


@dataclass(frozen=True)
class CameraIntrinsics:
    focal_length: float  # px
    principal_point: tuple[float, float]  # px
    resolution: tuple[int, int]  # width, height

    def __post_init__(self):
        w, h = self.resolution
        if w <= 0 or h <= 0 or self.focal_length <= 0:
            raise ValueError("resolution and focal length must be positive")

    @staticmethod
    def for_resolution(width: int, height: int,
                       focal_length: float | None = None) -> "CameraIntrinsics":
        """Principal point at the image center; when no focal length is given
        it is chosen for a 60 degree horizontal field of view."""
        if focal_length is None:
            focal_length = width / (2.0 * np.tan(np.pi / 6.0))
        return CameraIntrinsics(focal_length, (width / 2.0, height / 2.0),
                                (width, height))


@dataclass(frozen=True)
class Camera:
    position: tuple[float, float, float]
    look_at: tuple[float, float, float]
    intrinsics: CameraIntrinsics
    up_hint: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if np.allclose(self.position, self.look_at):
            raise ValueError("camera position must differ from look_at")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Right-handed (forward, right, down) frame; image x runs along
        `right`, image y along `down`."""
        fwd = np.subtract(self.look_at, self.position)
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, self.up_hint)
        norm = np.linalg.norm(right)
        if norm < 1e-9:  # looking along the up hint
            right = np.cross(fwd, _UP_FALLBACK)
            norm = np.linalg.norm(right)
        right = right / norm
        down = np.cross(fwd, right)
        return fwd, right, down

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pinhole projection to pixel coordinates.

        Returns (pixels (N, 2), depth (N,)); depth is the distance along the
        optical axis and is non-positive for points behind the camera, whose
        pixel coordinates are then meaningless.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        fwd, right, down = self.basis()
        rel = pts - np.asarray(self.position)
        depth = rel @ fwd
        f = self.intrinsics.focal_length
        cx, cy = self.intrinsics.principal_point
        with np.errstate(divide="ignore", invalid="ignore"):
            px = cx + f * (rel @ right) / depth
            py = cy + f * (rel @ down) / depth
        return np.column_stack([px, py]), depth

    def ray_directions(self) -> np.ndarray:
        """Unit ray direction through every pixel center, shaped (H, W, 3)."""
        w, h = self.intrinsics.resolution
        f = self.intrinsics.focal_length
        cx, cy = self.intrinsics.principal_point
        fwd, right, down = self.basis()
        xs = (np.arange(w) + 0.5 - cx) / f
        ys = (np.arange(h) + 0.5 - cy) / f
        dirs = (fwd[None, None, :]
                + xs[None, :, None] * right[None, None, :]
                + ys[:, None, None] * down[None, None, :])
        return dirs / np.linalg.norm(dirs, axis=2, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "look_at": list(self.look_at),
            "up_hint": list(self.up_hint),
            "focal_length": self.intrinsics.focal_length,
            "principal_point": list(self.intrinsics.principal_point),
            "resolution": list(self.intrinsics.resolution),
        }

    @staticmethod
    def from_dict(data: dict) -> "Camera":
        intr = CameraIntrinsics(
            float(data["focal_length"]),
            tuple(data["principal_point"]),
            tuple(int(x) for x in data["resolution"]),
        )
        return Camera(tuple(data["position"]), tuple(data["look_at"]),
                      intr, tuple(data["up_hint"]))


@dataclass(frozen=True)
class DirectionalLight:
    direction: tuple[float, float, float]  # unit vector toward the light
    intensity: tuple[float, float, float]  # RGB, may exceed 1

    def __post_init__(self):
        d = np.asarray(self.direction)
        n = np.linalg.norm(d)
        if n < 1e-12:
            raise ValueError("light direction must be non-zero")
        object.__setattr__(self, "direction", tuple(d / n))


@dataclass(frozen=True)
class Distractor:
    shape: str  # box | sphere | cylinder
    size: float  # m, overall diameter / edge length
    position: tuple[float, float]  # xy on the plane
    yaw: float
    rgb: tuple[float, float, float]

    def __post_init__(self):
        if self.shape not in ("box", "sphere", "cylinder"):
            raise ValueError(f"unknown distractor shape {self.shape!r}")
        if self.size <= 0:
            raise ValueError("distractor size must be positive")


def distractor_mesh(d: Distractor, plane_height: float
                    ) -> tuple[np.ndarray, np.ndarray]:
    """World-space (vertices, triangles) with the lowest point exactly at
    plane height."""
    s = d.size
    if d.shape == "box":
        h = s / 2.0
        corners = np.array([
            [-h, -h, 0], [h, -h, 0], [h, h, 0], [-h, h, 0],
            [-h, -h, s], [h, -h, s], [h, h, s], [-h, h, s],
        ], dtype=np.float64)
        tris = np.array([
            [0, 2, 1], [0, 3, 2],  # bottom (facing down)
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],
            [1, 2, 6], [1, 6, 5],
            [2, 3, 7], [2, 7, 6],
            [3, 0, 4], [3, 4, 7],
        ], dtype=np.int32)
        verts = corners
    elif d.shape == "sphere":
        rings, segs = 8, 12
        r = s / 2.0
        verts = [np.array([0.0, 0.0, 0.0])]  # bottom pole on the plane
        for ring in range(1, rings):
            phi = np.pi * ring / rings
            z = r - r * np.cos(phi)
            rr = r * np.sin(phi)
            for seg in range(segs):
                th = 2.0 * np.pi * seg / segs
                verts.append(np.array([rr * np.cos(th), rr * np.sin(th), z]))
        verts.append(np.array([0.0, 0.0, s]))  # top pole
        verts = np.array(verts)
        tris = []
        for seg in range(segs):
            tris.append([0, 1 + seg, 1 + (seg + 1) % segs])
        for ring in range(rings - 2):
            a = 1 + ring * segs
            b = a + segs
            for seg in range(segs):
                s0, s1 = seg, (seg + 1) % segs
                tris.append([a + s0, b + s0, b + s1])
                tris.append([a + s0, b + s1, a + s1])
        top = len(verts) - 1
        base = 1 + (rings - 2) * segs
        for seg in range(segs):
            tris.append([base + seg, top, base + (seg + 1) % segs])
        tris = np.array(tris, dtype=np.int32)
    else:  # cylinder
        segs = 16
        r = s / 2.0
        ang = 2.0 * np.pi * np.arange(segs) / segs
        ring = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        bottom = np.column_stack([ring, np.zeros(segs)])
        top = np.column_stack([ring, np.full(segs, s)])
        centers = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, s]])
        verts = np.vstack([bottom, top, centers])
        cb, ct = 2 * segs, 2 * segs + 1
        tris = []
        for seg in range(segs):
            nxt = (seg + 1) % segs
            tris.append([cb, nxt, seg])
            tris.append([ct, segs + seg, segs + nxt])
            tris.append([seg, nxt, segs + nxt])
            tris.append([seg, segs + nxt, segs + seg])
        tris = np.array(tris, dtype=np.int32)

    c, sn = np.cos(d.yaw), np.sin(d.yaw)
    rot = np.array([[c, -sn, 0.0], [sn, c, 0.0], [0.0, 0.0, 1.0]])
    verts = verts @ rot.T
    verts[:, 0] += d.position[0]
    verts[:, 1] += d.position[1]
    verts[:, 2] += plane_height
    return verts, tris


@dataclass
class SceneConfig:
    plane_height: float = 0.0
    plane_size: float = 3.0  # m, square ground patch
    cloth_thickness: float = 0.002
    distractor_count: tuple[int, int] = (0, 5)
    distractor_size: tuple[float, float] = (0.03, 0.2)
    distractor_distance: tuple[float, float] = (0.15, 0.9)
    camera_distance: tuple[float, float] = (0.5, 1.0)
    camera_elevation_deg: tuple[float, float] = (30.0, 90.0)
    camera_azimuth_deg: tuple[float, float] = (0.0, 360.0)
    ambient: tuple[float, float] = (0.2, 0.6)
    light_count: tuple[int, int] = (1, 3)
    resolution: tuple[int, int] = (512, 256)
    focal_length: float | None = None  # px; None = 60 degree horizontal FOV


@dataclass
class Scene:
    cloth_mesh: ClothMesh  # solidified, world space
    cloth_material: Material
    plane_center: tuple[float, float, float]
    plane_size: float
    plane_material: Material
    distractors: list[Distractor]
    ambient: float
    lights: list[DirectionalLight]
    camera: Camera
    background_rgb: tuple[float, float, float]

    def validate(self) -> None:
        self.cloth_mesh.validate()
        centroid = self.cloth_mesh.vertices.mean(axis=0)
        if not np.allclose(self.camera.look_at, centroid, atol=1e-9):
            raise ValueError("camera must look at the cloth centroid")
        if self.plane_size <= 0:
            raise ValueError("plane size must be positive")
        if self.ambient < 0:
            raise ValueError("ambient intensity must be non-negative")

    def to_dict(self) -> dict:
        return {
            "ambient": self.ambient,
            "background_rgb": list(self.background_rgb),
            "camera": self.camera.to_dict(),
            "cloth": {
                "category": self.cloth_mesh.category,
                "num_vertices": self.cloth_mesh.num_vertices,
                "material": self.cloth_material.to_dict(),
            },
            "distractors": [
                {"shape": d.shape, "size": d.size,
                 "position": list(d.position), "yaw": d.yaw,
                 "rgb": list(d.rgb)}
                for d in self.distractors
            ],
            "lights": [
                {"direction": list(l.direction), "intensity": list(l.intensity)}
                for l in self.lights
            ],
            "plane": {
                "center": list(self.plane_center),
                "size": self.plane_size,
                "material": self.plane_material.to_dict(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_dict(data: dict, cloth_mesh: ClothMesh) -> "Scene":
        return Scene(
            cloth_mesh=cloth_mesh,
            cloth_material=material_from_dict(data["cloth"]["material"]),
            plane_center=tuple(data["plane"]["center"]),
            plane_size=float(data["plane"]["size"]),
            plane_material=material_from_dict(data["plane"]["material"]),
            distractors=[
                Distractor(d["shape"], float(d["size"]),
                           tuple(d["position"]), float(d["yaw"]),
                           tuple(d["rgb"]))
                for d in data["distractors"]
            ],
            ambient=float(data["ambient"]),
            lights=[
                DirectionalLight(tuple(l["direction"]), tuple(l["intensity"]))
                for l in data["lights"]
            ],
            camera=Camera.from_dict(data["camera"]),
            background_rgb=tuple(data["background_rgb"]),
        )


def sample_camera(cloth_center, distance_range, elevation_range,
                  azimuth_range, intrinsics: CameraIntrinsics,
                  rng: np.random.Generator) -> Camera:
    """Position on a spherical cap around the cloth center, looking at it.

    Elevation is measured from the ground plane, so pi/2 looks straight down.
    Draw order: distance, elevation, azimuth.
    """
    d0, d1 = distance_range
    e0, e1 = elevation_range
    a0, a1 = azimuth_range
    if not (0 < d0 <= d1):
        raise ValueError("distance range must be positive and ordered")
    if not (0 < e0 <= e1 <= np.pi / 2 + 1e-12):
        raise ValueError("elevation range must lie in (0, pi/2]")
    if a1 < a0:
        raise ValueError("azimuth range must be ordered")
    dist = rng.uniform(d0, d1)
    elev = rng.uniform(e0, e1)
    azim = rng.uniform(a0, a1)
    center = np.asarray(cloth_center, dtype=np.float64)
    offset = dist * np.array([
        np.cos(elev) * np.cos(azim),
        np.cos(elev) * np.sin(azim),
        np.sin(elev),
    ])
    return Camera(tuple(center + offset), tuple(center), intrinsics)


def compose_scene(cloth: ClothMesh, material_procedure: str,
                  cfg: SceneConfig, rng: np.random.Generator) -> Scene:
    """Assemble a full scene around a deformed cloth mesh.

    The cloth is solidified to the configured thickness and rested just above
    the plane (a small clearance avoids coplanar ray ambiguities with the
    ground).  Draw order is fixed: cloth material, plane material, background,
    ambient, lights, distractors, camera.
    """
    solid = solidify(cloth, cfg.cloth_thickness)
    dz = (cfg.plane_height + _PLANE_CLEARANCE) - solid.vertices[:, 2].min()
    vertices = solid.vertices.copy()
    vertices[:, 2] += dz
    solid = solid.with_vertices(vertices)
    centroid = solid.vertices.mean(axis=0)

    cloth_material = sample_material(material_procedure, rng)
    plane_material = sample_material("random_texture", rng)
    background = tuple(rng.uniform(0.0, 1.0, 3))
    ambient = float(rng.uniform(*cfg.ambient))

    lights = []
    for _ in range(int(rng.integers(cfg.light_count[0],
                                    cfg.light_count[1] + 1))):
        az = rng.uniform(0.0, 2.0 * np.pi)
        el = rng.uniform(np.deg2rad(20.0), np.deg2rad(80.0))
        strength = rng.uniform(0.4, 1.0)
        tint = rng.uniform(0.7, 1.0, 3)
        lights.append(DirectionalLight(
            (np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)),
            tuple(strength * tint),
        ))

    distractors = []
    for _ in range(int(rng.integers(cfg.distractor_count[0],
                                    cfg.distractor_count[1] + 1))):
        shape = ("box", "sphere", "cylinder")[int(rng.integers(3))]
        size = float(rng.uniform(*cfg.distractor_size))
        az = rng.uniform(0.0, 2.0 * np.pi)
        radial = rng.uniform(*cfg.distractor_distance)
        yaw = float(rng.uniform(0.0, 2.0 * np.pi))
        rgb = tuple(rng.uniform(0.05, 0.95, 3))
        distractors.append(Distractor(
            shape, size,
            (float(centroid[0] + radial * np.cos(az)),
             float(centroid[1] + radial * np.sin(az))),
            yaw, rgb,
        ))

    camera = sample_camera(
        centroid, cfg.camera_distance,
        tuple(np.deg2rad(cfg.camera_elevation_deg)),
        tuple(np.deg2rad(cfg.camera_azimuth_deg)),
        CameraIntrinsics.for_resolution(*cfg.resolution, cfg.focal_length),
        rng,
    )

    scene = Scene(
        cloth_mesh=solid,
        cloth_material=cloth_material,
        plane_center=(float(centroid[0]), float(centroid[1]),
                      cfg.plane_height),
        plane_size=cfg.plane_size,
        plane_material=plane_material,
        distractors=distractors,
        ambient=ambient,
        lights=lights,
        camera=camera,
        background_rgb=background,
    )
    scene.validate()
    return scene


def plane_mesh(scene: Scene) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ground rectangle as (vertices, triangles, uvs); UVs span the patch."""
    cx, cy, z = scene.plane_center
    h = scene.plane_size / 2.0
    verts = np.array([
        [cx - h, cy - h, z], [cx + h, cy - h, z],
        [cx + h, cy + h, z], [cx - h, cy + h, z],
    ])
    tris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int32)
    uvs = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return verts, tris, uvs
