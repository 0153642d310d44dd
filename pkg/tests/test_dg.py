from __future__ import annotations

import numpy as np
import pytest

from shocktrack.dg import DGDiscretization, Dirichlet
from shocktrack.errors import InvertedElementError
from shocktrack.laws import Advection, Burgers, Euler
from shocktrack.mesh import interval_mesh
from shocktrack.problems import advec1d, burgers1d
from shocktrack.timeloop import initialize
from shocktrack.verify import free_stream_residual, jacobian_errors


def constant_state(dg, value):
    return np.tile(np.asarray(value, dtype=float), dg.E * dg.nb)


def test_mass_matrix_spd_and_integrates_length():
    m = interval_mesh([(0.0, 2.0, 5)])
    dg = DGDiscretization(Burgers(1.0), m, 3, "periodic")
    M = dg.mass_matrix("p").toarray()
    np.testing.assert_allclose(M, M.T, atol=1e-15)
    assert np.linalg.eigvalsh(M).min() > 0
    ones = np.ones(dg.n_u)
    assert ones @ M @ ones == pytest.approx(2.0)
    assert dg.mass_matrix("e").shape == (5 * 5, dg.n_u)


def test_constant_state_is_steady_on_fixed_mesh():
    m = interval_mesh([(0.0, 1.0, 6)])
    dg = DGDiscretization(Advection(1.3), m, 4, "periodic")
    u = constant_state(dg, [0.7])
    zero = np.zeros(dg.n_x)
    assert np.max(np.abs(dg.semidiscrete_residual(0 * u, u, zero, m.ref_coords))) < 1e-13
    assert np.max(np.abs(dg.enriched_residual(0 * u, u, zero, m.ref_coords))) < 1e-13


def test_free_stream_under_mesh_motion():
    assert free_stream_residual() < 1e-10
    assert free_stream_residual(p=2, n_elements=5) < 1e-10


def test_spatial_term_conserves_mass_periodic():
    rng = np.random.default_rng(0)
    m = interval_mesh([(0.0, 1.0, 8)], periodic=True)
    dg = DGDiscretization(Burgers(1.0), m, 3, "periodic")
    u = rng.uniform(-1, 1, dg.n_u)
    rhs = dg.spatial_term(u, m.ref_coords, np.zeros(dg.n_x))
    # summing the test functions reproduces the constant: the flux sum telescopes
    assert abs(rhs.sum()) < 1e-12


@pytest.mark.parametrize("build", [lambda: advec1d(4, p=2), lambda: burgers1d(4, p=2)], ids=["advec", "burgers"])
def test_jacobians_match_finite_differences(build):
    errs = jacobian_errors(build(), n_samples=3, seed=1)
    assert max(errs.values()) < 1e-6


def test_physical_values_and_total_mass():
    setup = burgers1d(4, p=2)
    dg, u, x = initialize(setup)
    xs, U = dg.physical_values(u, x, [-1.0, 1.0])
    np.testing.assert_allclose(xs[:, 0], x[dg.conn[:, 0]])
    assert U[0, 0, 0] == pytest.approx(2.0 * (-1.0 + 1.0) ** 2, abs=1e-14)
    # Gauss quadrature of the degree-2 interpolant of 2(x+1)^2 on [-1, 0] is exact
    assert dg.total_mass(u)[0] == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_stretched_mesh_doubles_mass():
    m = interval_mesh([(0.0, 1.0, 3)])
    dg = DGDiscretization(Euler(1.4), m, 2, (Dirichlet([1.0, 0.0, 2.5]), Dirichlet([1.0, 0.0, 2.5])))
    u = constant_state(dg, [1.0, 0.0, 2.5])
    _, U = dg.physical_values(u, 2 * m.ref_coords, [0.0])
    np.testing.assert_allclose(U[..., 0], 0.5)


def test_inverted_reference_mesh_rejected():
    m = interval_mesh([(0.0, 1.0, 3)])
    m.ref_coords[1], m.ref_coords[2] = m.ref_coords[2], m.ref_coords[1]
    with pytest.raises(InvertedElementError):
        DGDiscretization(Burgers(1.0), m, 2, "periodic")
