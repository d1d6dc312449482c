"""Wavefront OBJ reading/writing with keypoint anchors in comments.

Meshes round-trip exactly: triangle indices bit-for-bit, coordinates through
a %.9g float format (sufficient to reproduce float32-precision geometry and
then some).  Keypoint anchors are stored as ``# kp <name> <vertex-index>``
comment lines, the category as ``# category <tag>``; both survive loading.
"""
from __future__ import annotations

import os

import numpy as np

from .geometry import ClothMesh

_FMT = "%.9g"


def save_obj(mesh: ClothMesh, path: str | os.PathLike) -> None:
    lines = ["# clothforge mesh"]
    if mesh.category:
        lines.append(f"# category {mesh.category}")
    for name in sorted(mesh.keypoint_vertices):
        lines.append(f"# kp {name} {mesh.keypoint_vertices[name]}")
    for v in mesh.vertices:
        lines.append("v %s %s %s" % (_FMT % v[0], _FMT % v[1], _FMT % v[2]))
    for uv in mesh.uvs:
        lines.append("vt %s %s" % (_FMT % uv[0], _FMT % uv[1]))
    for t in mesh.triangles:
        a, b, c = int(t[0]) + 1, int(t[1]) + 1, int(t[2]) + 1
        lines.append(f"f {a}/{a} {b}/{b} {c}/{c}")
    data = "\n".join(lines) + "\n"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(data)


def load_obj(path: str | os.PathLike) -> ClothMesh:
    verts: list[list[float]] = []
    uvs: list[list[float]] = []
    tris: list[list[int]] = []
    keypoints: dict[str, int] = {}
    category = ""
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "#":
                if len(parts) == 4 and parts[1] == "kp":
                    keypoints[parts[2]] = int(parts[3])
                elif len(parts) == 3 and parts[1] == "category":
                    category = parts[2]
                continue
            if parts[0] == "v":
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts[0] == "vt":
                uvs.append([float(parts[1]), float(parts[2])])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ValueError(f"only triangle faces are supported: {line!r}")
                tris.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
    if not verts:
        raise ValueError(f"no vertices found in {path}")
    v = np.asarray(verts, dtype=np.float64)
    uv = np.asarray(uvs, dtype=np.float64) if uvs else np.zeros((len(verts), 2))
    mesh = ClothMesh(v, np.asarray(tris, dtype=np.int32), uv, keypoints, category)
    mesh.validate()
    return mesh
