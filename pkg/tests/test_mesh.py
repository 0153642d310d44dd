from __future__ import annotations

import numpy as np
import pytest

from shocktrack.errors import InvertedElementError
from shocktrack.mesh import (
    MeshConfiguration,
    MovingMesh,
    advect_shock_nodes,
    check_validity,
    deformation_gradients,
    distortion_integrand,
    distortion_metric,
    interval_mesh,
    jacobian_ratio_at_nodes,
    mapping_quantities,
    mesh_distortion,
    read_mesh,
    regularized_distortion,
    smooth_mesh,
    write_mesh,
)
from shocktrack.verify import displaced_patch_coords, triangle_patch


def test_interval_mesh_layout():
    m = interval_mesh([(-4.5, -4.0, 4), (-4.0, 4.5, 4)], q=2, shock_at=[-4.0])
    assert m.n_elements == 8 and m.n_nodes == 17
    assert m.ref_coords[m.shock_nodes[0]] == pytest.approx(-4.0)
    assert sorted(m.boundary_markers) == [0, 16]
    np.testing.assert_allclose(np.diff(m.ref_coords[m.vertex_nodes()][:4]), 0.125)
    with pytest.raises(ValueError):
        interval_mesh([(0, 1, 3)], shock_at=[0.5])


def test_mapping_quantities_examples():
    m = interval_mesh([(0.0, 1.0, 1)])
    ident = mapping_quantities(m, MeshConfiguration(m.ref_coords), 0, [[-0.3], [0.8]])
    np.testing.assert_allclose(ident["g"], 1.0)
    np.testing.assert_allclose(ident["v"], 0.0)
    st = mapping_quantities(m, MeshConfiguration([0.0, 2.0], [1.0, 1.0]), 0, [[0.1]])
    assert st["G"][0, 0, 0] == pytest.approx(2.0) and st["g"][0] == pytest.approx(2.0)
    assert st["v"][0, 0] == pytest.approx(1.0)


def test_distortion_metric_examples():
    I = np.eye(2)[None, None]
    assert distortion_metric(I, np.array([[0.5]])) == pytest.approx(0.5)
    th = 0.7
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])[None, None]
    assert distortion_metric(R, np.array([[0.5]])) == pytest.approx(0.5, rel=1e-14)
    S = np.diag([2.0, 0.5])[None, None]
    assert distortion_integrand(S)[0, 0] == pytest.approx(4.515625)
    # inverted points are infinitely distorted unless regularized
    F = np.diag([1.0, -1.0])[None, None]
    assert np.isinf(distortion_metric(F, np.array([[1.0]])))
    assert np.isfinite(regularized_distortion(np.zeros((1, 1, 2, 2)), np.array([[1.0]]), delta=1e-2))


def test_regularization_limit():
    S = np.diag([1.3, 0.9])[None, None]
    w = np.array([[1.0]])
    exact = distortion_metric(S, w)
    assert abs(regularized_distortion(S, w, 1e-4) - exact) / exact < 1e-7
    with pytest.raises(ValueError):
        regularized_distortion(S, w, 0.0)


def test_similarity_maps_of_equilateral_element_are_ideal():
    # physical equilateral triangle from the reference right triangle, composed with similarities
    mesh = MovingMesh(2, 1, np.array([0, 0, 1, 0, 0, 1.0]), np.array([[0, 1, 2]]))
    eq = np.array([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    pts = mesh.element.quad_points
    G0, _ = deformation_gradients(mesh, eq.reshape(-1), pts)
    base = distortion_integrand(G0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        th, s = rng.uniform(0, 6), rng.uniform(0.2, 3)
        R = s * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        G, _ = deformation_gradients(mesh, (eq @ R.T + 1.0).reshape(-1), pts)
        np.testing.assert_allclose(distortion_integrand(G), base, rtol=1e-12)


def test_rigid_motion_invariance():
    rng = np.random.default_rng(1)
    mesh = triangle_patch()
    x = mesh.ref_coords.reshape(-1, 2) + 0.05 * rng.standard_normal((5, 2))
    e0 = mesh_distortion(mesh, x.reshape(-1))
    for _ in range(20):
        th = rng.uniform(0, 2 * np.pi)
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        xr = x @ R.T + rng.uniform(-5, 5, 2)
        assert abs(mesh_distortion(mesh, xr.reshape(-1)) - e0) / e0 < 1e-12


def test_distortion_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    mesh = triangle_patch()
    x = mesh.ref_coords + 0.03 * rng.standard_normal(mesh.ref_coords.size)
    assert check_validity(mesh, x).valid
    E, g = mesh_distortion(mesh, x, grad=True)
    d = rng.standard_normal(x.size)
    h = 1e-6
    fd = (mesh_distortion(mesh, x + h * d) - mesh_distortion(mesh, x - h * d)) / (2 * h)
    assert np.dot(g, d) == pytest.approx(fd, rel=1e-6)


def test_tangled_1d_pair_gradient_points_to_untangling():
    m = interval_mesh([(0.0, 1.0, 2)])
    x = np.array([0.0, 0.7, 0.6])  # second element reversed
    # a 1D check through the 2D-style metric machinery: moving the middle node left helps
    E, g = mesh_distortion(m, x, grad=True)
    assert np.isfinite(E)
    assert g[1] > 0


def test_smooth_1d_equidistributes():
    m = interval_mesh([(0.0, 1.0, 4)], shock_at=[0.5])
    x = m.ref_coords.copy()
    x[1], x[3] = 0.1, 0.95
    np.testing.assert_allclose(smooth_mesh(m, x), [0, 0.25, 0.5, 0.75, 1.0])
    # tangled input: shock node pushed past its neighbour
    x = m.ref_coords.copy()
    x[2] = 0.8
    out = smooth_mesh(m, x)
    assert check_validity(m, out).valid
    np.testing.assert_allclose(out, [0, 0.4, 0.8, 0.9, 1.0])


def test_smooth_1d_high_order_nodes_affine():
    m = interval_mesh([(0.0, 1.0, 3)], q=2, shock_at=[])
    x = m.ref_coords + 0.01 * np.sin(2 * np.pi * m.ref_coords)  # vanishes at both ends
    out = smooth_mesh(m, x)
    np.testing.assert_allclose(out, m.ref_coords, atol=1e-14)


def test_randomized_partitions_stay_valid():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = interval_mesh([(0.0, 1.0, 12)], q=int(rng.integers(1, 3)), shock_at=[0.5])
        x = m.ref_coords.copy()
        x[m.shock_nodes] = rng.uniform(0.05, 0.95)
        x += 0.02 * rng.standard_normal(x.size) * np.isin(np.arange(x.size), m.boundary_nodes(), invert=True)
        x[m.shock_nodes] = np.clip(x[m.shock_nodes], 0.05, 0.95)
        assert check_validity(m, smooth_mesh(m, x)).valid


def test_smooth_2d_untangles_patch():
    mesh = triangle_patch()
    x0 = displaced_patch_coords(mesh)
    assert not check_validity(mesh, x0).valid
    out = smooth_mesh(mesh, x0)
    assert check_validity(mesh, out).valid
    assert mesh_distortion(mesh, out) <= mesh_distortion(mesh, x0)
    np.testing.assert_allclose(out[:8], x0[:8])  # boundary nodes untouched


def test_check_validity_examples():
    m = interval_mesh([(0.0, 1.0, 3)])
    v = check_validity(m, m.ref_coords)
    assert v.valid and v.min_det == pytest.approx(1.0)
    x = m.ref_coords.copy()
    x[1], x[2] = x[2], x[1]
    bad = check_validity(m, x)
    assert not bad.valid and bad.min_det < 0 and bad.worst_element == 1
    tri = triangle_patch()
    assert check_validity(tri, 2 * tri.ref_coords).min_det == pytest.approx(4.0)


def test_advect_then_smooth_identity_for_zero_speed():
    m = interval_mesh([(0.0, 1.0, 10)], shock_at=[0.3])
    y = advect_shock_nodes(m, m.ref_coords, [0.0], 0.1)
    np.testing.assert_allclose(smooth_mesh(m, y), m.ref_coords, atol=1e-15)
    moved = advect_shock_nodes(m, m.ref_coords, [1.0], 0.01)
    assert moved[m.shock_nodes[0]] == pytest.approx(0.31)
    assert np.count_nonzero(moved != m.ref_coords) == 1


def test_jacobian_ratio():
    m = interval_mesh([(0.0, 1.0, 2)])
    new = np.array([0.0, 0.25, 1.0])
    r = jacobian_ratio_at_nodes(m, new, m.ref_coords, np.array([[-1.0], [1.0]]))
    np.testing.assert_allclose(r, [[0.5, 0.5], [1.5, 1.5]])
    with pytest.raises(InvertedElementError):
        jacobian_ratio_at_nodes(m, new, np.array([0.0, 1.0, 0.5]), np.array([[0.0]]))


def test_mesh_io_round_trip(tmp_path):
    for m in (interval_mesh([(0.0, 1.0, 5)], q=2, shock_at=[0.4]), triangle_patch()):
        write_mesh(m, tmp_path / "m.txt")
        r = read_mesh(tmp_path / "m.txt")
        np.testing.assert_array_equal(r.ref_coords, m.ref_coords)
        np.testing.assert_array_equal(r.connectivity, m.connectivity)
        np.testing.assert_array_equal(r.shock_nodes, m.shock_nodes)
        assert r.boundary_markers == m.boundary_markers and r.dim == m.dim and r.q == m.q
