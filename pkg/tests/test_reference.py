from __future__ import annotations

import numpy as np
import pytest

from shocktrack.reference import (
    CharacteristicsReference,
    burgers_left_state,
    burgers_shock_oracle,
    characteristics_reference,
    rk4,
    shu_osher_fv_oracle,
)


def test_rk4_fourth_order():
    errs = [abs(rk4(lambda t, y: -y, [1.0], 0.0, 1.0, n)[0] - np.exp(-1.0)) for n in (10, 20)]
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.1)


def test_characteristics_constant_speed():
    ref = CharacteristicsReference(lambda x: 2.0 + 0 * x, lambda z: np.sin(2 * np.pi * z), n_steps=50)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(ref(x, 0.3), np.sin(2 * np.pi * (x - 0.6)), atol=1e-12)
    assert ref.shock_location(0.3) == pytest.approx(0.1)


def test_characteristics_preserve_flux_and_mass():
    beta = lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x) ** 2  # noqa: E731
    init = lambda z: 1.0 + 0 * z  # noqa: E731
    xq, wq = np.polynomial.legendre.leggauss(400)
    x = 0.5 * (xq + 1)
    U, xs = characteristics_reference(beta, init, 0.25, x, n_steps=2000)
    assert 0.5 * wq @ U == pytest.approx(1.0, rel=1e-8)
    assert 0.5 < xs < 1.0


def test_burgers_left_state_linear_data():
    # u0 = x: u = x / (1 + t)
    x = np.linspace(-1, 1, 9)
    np.testing.assert_allclose(burgers_left_state(lambda z: z, lambda z: 1.0 + 0 * z, x, 0.5), x / 1.5)


def test_burgers_shock_oracle_riemann():
    xs = burgers_shock_oracle(0.4, u0=lambda z: 2.0 + 0 * z, du0=lambda z: 0 * z, n_steps=100)
    assert xs == pytest.approx(0.4)
    assert burgers_shock_oracle(1.0, n_steps=2000) == pytest.approx(burgers_shock_oracle(1.0, n_steps=4000), abs=1e-10)


def test_fv_oracle_coarse_shock_speed():
    fv = shu_osher_fv_oracle(t_final=0.2, n_cells=900)
    # Mach 3 into a nearly unit state: roughly 3*sqrt(1.4) = 3.55
    assert fv.shock_position == pytest.approx(-4.0 + 0.2 * 3.55, abs=0.05)
    assert np.all(fv.density > 0)


def test_error_metrics_examples():
    from shocktrack.problems import advec1d
    from shocktrack.reference import error_metrics
    from shocktrack.timeloop import initialize

    setup = advec1d(4, p=2, beta=lambda x: 1.0 + 0 * np.asarray(x),
                    pieces=[lambda x: 1.0 + 0 * x, lambda x: 1.0 + 0 * x])
    dg, u, x = initialize(setup)
    same = error_metrics(dg, u, x, lambda q: 1.0 + 0 * q, 0.5, 0.5)
    assert same == {"l1_solution_error": 0.0, "shock_location_error": 0.0}
    off = error_metrics(dg, u, x, lambda q: 1.25 + 0 * q, 0.5, 0.4)
    assert off["l1_solution_error"] == pytest.approx(0.25, rel=1e-14)
    assert off["shock_location_error"] == pytest.approx(0.1)
