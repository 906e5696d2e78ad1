import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amigo import shapes
from amigo.errors import DegenerateFace, NonManifold, NotClosed, ParseError
from amigo.mesh import (
    TriangleMesh,
    compute_curvatures,
    crater_mask,
    gaussian_and_mean,
    load_mesh,
    normalize_area,
    save_obj,
    smooth_craters,
)


def test_tetrahedron_counts(tmp_path):
    path = tmp_path / "tet.obj"
    save_obj(shapes.tetrahedron(), path)
    m = load_mesh(path)
    assert (m.n_vertices, m.n_faces, len(m.edges)) == (4, 4, 6)
    assert m.euler_characteristic() == 2


def test_icosphere_counts(tmp_path):
    path = tmp_path / "ico.obj"
    save_obj(shapes.icosphere(3), path)
    m = load_mesh(path)
    assert (m.n_vertices, m.n_faces) == (642, 1280)


def test_open_patch_rejected(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(NotClosed):
        load_mesh(path)


def test_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        load_mesh(tmp_path / "missing.obj")
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 zero\n")
    with pytest.raises(ParseError):
        load_mesh(bad)


def test_degenerate_and_nonmanifold():
    tet = shapes.tetrahedron()
    v = tet.vertices.copy()
    with pytest.raises(DegenerateFace):
        TriangleMesh.from_arrays(v, np.array([[0, 1, 1], [0, 1, 2], [0, 2, 3], [1, 3, 2]]))
    # three faces on one edge
    verts = np.vstack([v, [[0.3, -2.0, 0.1]]])
    faces = np.vstack([tet.faces, [[0, 1, 4]]])
    with pytest.raises((NonManifold, NotClosed)):
        TriangleMesh.from_arrays(verts, faces)


def test_orientation_made_consistent_outward():
    tet = shapes.tetrahedron()
    flipped = TriangleMesh.from_arrays(tet.vertices, tet.faces[:, ::-1])
    assert flipped.signed_volume() > 0


def test_normalize_tetrahedron_scale():
    tet = shapes.tetrahedron(edge=1.0)
    assert tet.area() == pytest.approx(np.sqrt(3))
    out = normalize_area(tet)
    assert out.scale == pytest.approx(3 ** -0.25)
    assert out.area() == pytest.approx(1.0, abs=1e-9)


def test_normalize_identity_on_unit_area():
    m = normalize_area(shapes.icosphere(2))
    again = normalize_area(m)
    assert np.array_equal(again.vertices, m.vertices)


def test_normalize_sphere_radius():
    m = normalize_area(shapes.icosphere(4, radius=2.0))
    r = np.linalg.norm(m.vertices, axis=1)
    # inscribed polyhedron: radius slightly above the smooth value
    assert r.mean() == pytest.approx(1 / (2 * np.sqrt(np.pi)), rel=5e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 50.0), st.integers(0, 3))
def test_normalize_area_property(scale, sub):
    m = shapes.icosphere(sub, radius=scale)
    assert normalize_area(m).area() == pytest.approx(1.0, abs=1e-9)


def test_unit_sphere_curvature():
    m = shapes.icosphere(5)
    c = compute_curvatures(m)
    assert np.median(c.gaussian) == pytest.approx(1.0, rel=0.05)
    assert np.median(c.mean) == pytest.approx(1.0, rel=0.05)
    assert np.median(c.k1) == pytest.approx(1.0, rel=0.05)


def test_cylinder_side_flat():
    m = shapes.capped_cylinder()
    K, _ = gaussian_and_mean(m)
    side = np.abs(m.vertices[:, 2] - 0.8) < 0.5
    assert np.abs(K[side]).max() < 1e-6


def test_saddle_negative_gaussian():
    m = normalize_area(shapes.dumbbell())
    K, H = gaussian_and_mean(m)
    waist = np.abs(m.vertices[:, 2]) < 0.02
    assert (K[waist] < 0).all()


@pytest.mark.parametrize("make", [shapes.icosphere, shapes.two_ear_sphere, shapes.torus])
def test_gauss_bonnet(make):
    m = make()
    K, _ = gaussian_and_mean(m)
    total = np.sum(K * m.vertex_areas)
    assert total == pytest.approx(2 * np.pi * m.euler_characteristic(), abs=0.02 * 4 * np.pi)


def test_crater_smoothing_dimple():
    m = normalize_area(shapes.dimpled_sphere())
    K, H = gaussian_and_mean(m)
    flagged = crater_mask(K, H)
    assert flagged.any()
    out = smooth_craters(m)
    K2, H2 = gaussian_and_mean(out)
    assert out.n_vertices == m.n_vertices
    assert H2[flagged].min() >= -1e-3
    assert out.area() == pytest.approx(1.0, abs=1e-9)


def test_crater_smoothing_noop():
    m = normalize_area(shapes.icosphere(3))
    out = smooth_craters(m)
    assert np.abs(out.vertices - m.vertices).max() < 1e-12


def test_torus_has_no_craters():
    m = normalize_area(shapes.torus())
    K, H = gaussian_and_mean(m)
    assert not crater_mask(K, H).any()
    assert np.array_equal(smooth_craters(m).vertices, m.vertices)
