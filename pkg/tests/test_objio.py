"""OBJ round-trip fidelity."""
from __future__ import annotations

import numpy as np
import pytest

from clothforge.geometry import ClothMesh
from clothforge.objio import load_obj, save_obj


def _sample_mesh():
    rng = np.random.default_rng(4)
    verts = rng.uniform(-1, 1, (20, 3))
    tris = np.array([[i, i + 1, i + 2] for i in range(0, 18, 3)])
    uvs = rng.uniform(0, 1, (20, 2))
    return ClothMesh(verts, tris, uvs, {"corner0": 0, "corner1": 5}, "towel")


def test_roundtrip_exact_indices_and_names(tmp_path):
    mesh = _sample_mesh()
    path = tmp_path / "m.obj"
    save_obj(mesh, path)
    back = load_obj(path)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert back.keypoint_vertices == mesh.keypoint_vertices
    assert back.category == "towel"
    assert back.uvs.shape == mesh.uvs.shape


def test_roundtrip_coordinates_9_digits(tmp_path):
    mesh = _sample_mesh()
    path = tmp_path / "m.obj"
    save_obj(mesh, path)
    back = load_obj(path)
    assert np.allclose(back.vertices, mesh.vertices, rtol=1e-8, atol=1e-12)
    assert np.allclose(back.uvs, mesh.uvs, rtol=1e-8, atol=1e-12)


def test_second_roundtrip_is_byte_identical(tmp_path):
    mesh = _sample_mesh()
    p1 = tmp_path / "a.obj"
    p2 = tmp_path / "b.obj"
    save_obj(mesh, p1)
    save_obj(load_obj(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_ngons(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(ValueError):
        load_obj(path)


def test_load_missing_uvs_defaults_to_zero(tmp_path):
    path = tmp_path / "plain.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    mesh = load_obj(path)
    assert mesh.uvs.shape == (3, 2)
    assert np.all(mesh.uvs == 0)
