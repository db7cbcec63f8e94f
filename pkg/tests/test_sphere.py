import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from oddaxis import sphere
from oddaxis.errors import ParameterError


@pytest.mark.parametrize("level", range(5))
def test_icosphere_counts(level):
    mesh = sphere.icosphere(level)
    assert len(mesh.vertices) == 10 * 4 ** level + 2
    assert len(mesh.faces) == 20 * 4 ** level
    # Euler characteristic of the sphere
    assert len(mesh.vertices) - len(mesh.edges()) + len(mesh.faces) == 2


def test_level0_and_level1_counts():
    m0, m1 = sphere.icosphere(0), sphere.icosphere(1)
    assert (len(m0.vertices), len(m0.faces)) == (12, 20)
    assert (len(m1.vertices), len(m1.faces)) == (42, 80)


@pytest.mark.parametrize("level", [0, 2, 4])
def test_vertices_on_sphere(level):
    mesh = sphere.icosphere(level)
    assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-15)


def test_total_area():
    mesh = sphere.icosphere(4)
    assert abs(mesh.quad_weights.sum() - 4 * np.pi) < 1e-6


def test_area_matches_girard_formula(rng):
    # independent route: angle excess from tangent-plane angles
    a, b, c = (sphere.random_sphere_points(50, rng) for _ in range(3))

    def angle(p, q, r):
        u = q - (q * p).sum(1, keepdims=True) * p
        v = r - (r * p).sum(1, keepdims=True) * p
        cos = (u * v).sum(1) / np.linalg.norm(u, axis=1) / np.linalg.norm(v, axis=1)
        return np.arccos(np.clip(cos, -1, 1))

    excess = angle(a, b, c) + angle(b, c, a) + angle(c, a, b) - np.pi
    assert_allclose(sphere.spherical_triangle_areas(a, b, c), excess, atol=1e-10)


@pytest.mark.parametrize("level", [0, 1, 3, 5])
def test_antipode_is_exact_involution(level):
    mesh = sphere.icosphere(level)
    assert_array_equal(mesh.antipode[mesh.antipode], np.arange(len(mesh.vertices)))
    assert_array_equal(mesh.vertices[mesh.antipode], -mesh.vertices)


def test_faces_oriented_outward():
    mesh = sphere.icosphere(3)
    t = mesh.vertices[mesh.faces]
    normals = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
    assert np.all((normals * t.sum(axis=1)).sum(axis=1) > 0)


@pytest.mark.parametrize("level", [-1, 9])
def test_level_out_of_range(level):
    with pytest.raises(ParameterError):
        sphere.icosphere(level)


def test_circle_grid_examples():
    g = sphere.circle_grid(8)
    assert_array_equal(g[0], [1.0, 0.0])
    assert_array_equal(g[4], [-1.0, 0.0])
    ang = np.unwrap(np.arctan2(*sphere.circle_grid(12)[:, ::-1].T))
    assert_allclose(np.diff(ang), np.pi / 6, atol=1e-14)


@pytest.mark.parametrize("m", [8, 14, 256, 1000])
def test_circle_grid_antipodes_exact(m):
    g = sphere.circle_grid(m)
    assert_array_equal(g[m // 2:], -g[:m // 2])


@pytest.mark.parametrize("m", [7, 6, 9])
def test_circle_grid_rejects_bad_size(m):
    with pytest.raises(ParameterError):
        sphere.circle_grid(m)


def test_quadrature_moments():
    mesh = sphere.icosphere(4)
    assert abs(sphere.surface_integral(mesh, lambda p: np.ones(len(p))) - 4 * np.pi) < 1e-6
    assert abs(sphere.surface_integral(mesh, lambda p: p[:, 2] ** 2) - 4 * np.pi / 3) < 1e-3
    assert abs(sphere.surface_integral(mesh, lambda p: p[:, 2])) < 1e-9


def test_tangent_frame_positive(rng):
    p = sphere.random_sphere_points(200, rng)
    eu, ev = sphere.tangent_frame(p)
    assert_allclose((eu * p).sum(1), 0, atol=1e-15)
    assert_allclose((eu * ev).sum(1), 0, atol=1e-15)
    assert_allclose(np.cross(eu, ev), p, atol=1e-15)


def test_off_export(tmp_path):
    mesh = sphere.icosphere(1)
    path = tmp_path / "mesh.off"
    mesh.write_off(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    assert lines[1] == "42 80 0"
    verts = np.array([[float(x) for x in line.split()] for line in lines[2:44]])
    assert_array_equal(verts, mesh.vertices)
    assert all(line.startswith("3 ") for line in lines[44:])
    assert len(lines) == 2 + 42 + 80
