from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shocktrack.errors import DegenerateJumpError, InadmissibleStateError, InvertedElementError
from shocktrack.laws import (
    Advection,
    Burgers,
    Euler,
    rankine_hugoniot_speed,
    reference_numerical_flux,
    smoothed_abs,
    transformed_flux,
)


def varying_beta(x):
    return 1.0 + 0.5 * np.sin(2 * np.pi * np.asarray(x)) ** 2


def random_euler_states(rng, n, gamma=1.4):
    law = Euler(gamma)
    return law.to_conservative(rng.uniform(0.2, 5, n), rng.uniform(-3, 3, n), rng.uniform(0.2, 10, n))


# -- physical and modified fluxes ---------------------------------------------

def test_physical_flux_examples():
    assert Advection(lambda x: 1.5 + 0 * x).flux(np.array([2.0]), np.array([0.3]))[0, 0] == pytest.approx(3.0)
    assert Burgers(1.0).flux(np.array([2.0]))[0, 0] == pytest.approx(2.0)
    F = Euler(1.4).flux(np.array([1.0, 0.0, 2.0]))
    np.testing.assert_allclose(F[:, 0], [0.0, 0.8, 0.0], atol=1e-15)
    assert Euler(1.4).pressure(np.array([1.0, 0.0, 2.0])) == pytest.approx(0.8)


@pytest.mark.parametrize("U", [[0.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [1.0, 0.0, 0.0], [1.0, 3.0, 1.0]])
def test_euler_rejects_inadmissible_states(U):
    with pytest.raises(InadmissibleStateError) as exc:
        Euler(1.4).flux(np.array(U))
    assert exc.value.component in ("density", "pressure")


def test_primitive_round_trip():
    rng = np.random.default_rng(3)
    law = Euler(1.4)
    rho, v, P = rng.uniform(0.1, 5, 200), rng.uniform(-4, 4, 200), rng.uniform(0.1, 9, 200)
    prim = law.to_primitive(law.to_conservative(rho, v, P))
    for a, b in ((prim.rho, rho), (prim.v[..., 0] if np.ndim(prim.v) > 1 else prim.v, v), (prim.P, P)):
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_modified_flux_examples():
    U = np.array([2.0])
    np.testing.assert_allclose(Burgers(1.0).modified_flux(U, 0.0), Burgers(1.0).flux(U))
    assert Advection(1.0).modified_flux(np.array([1.0]), 1.0)[0, 0] == pytest.approx(0.0)
    assert Burgers(1.0).modified_flux(U, 0.5)[0, 0] == pytest.approx(1.0)


@pytest.mark.parametrize("law", [Advection(varying_beta), Burgers(1.0), Euler(1.4)], ids=["adv", "burg", "euler"])
def test_flux_jacobian_matches_finite_differences(law):
    rng = np.random.default_rng(0)
    n = 100
    x = rng.uniform(0, 1, n)
    U = random_euler_states(rng, n) if isinstance(law, Euler) else rng.uniform(-2, 2, (n, 1))
    A = law.flux_jacobian(U, x)[..., 0]  # (n, m, m)
    h = 1e-6
    for j in range(law.m):
        e = np.zeros(law.m)
        e[j] = h * max(1.0, np.max(np.abs(U[:, j])))
        fd = (law.flux(U + e, x) - law.flux(U - e, x))[..., 0] / (2 * e[j])
        np.testing.assert_allclose(A[:, :, j], fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(fd)))


# -- smoothed absolute value ---------------------------------------------------

def test_smoothed_abs_examples():
    assert smoothed_abs(0.0, 100) == 0.0
    assert smoothed_abs(-2.0, 100) == smoothed_abs(2.0, 100)
    assert smoothed_abs(1.0, 100) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        smoothed_abs(1.0, 0.0)


@given(st.floats(-50, 50, allow_nan=False), st.floats(0.1, 1e4))
def test_smoothed_abs_even_and_below_abs(x, k):
    assert smoothed_abs(x, k) == smoothed_abs(-x, k)
    assert 0.0 <= smoothed_abs(x, k) <= abs(x) + 1e-15


def test_smoothed_abs_limit():
    xs = np.linspace(-10, 10, 20001)
    assert np.max(np.abs(smoothed_abs(xs, 1e6) - np.abs(xs))) < 1e-5


# -- numerical fluxes ----------------------------------------------------------

@pytest.mark.parametrize("law", [Advection(varying_beta), Burgers(1.0), Euler(1.4)], ids=["adv", "burg", "euler"])
def test_numerical_flux_consistent_and_conservative(law):
    rng = np.random.default_rng(1)
    n = 1000
    x = rng.uniform(0, 1, n)
    v = rng.uniform(-2, 2, n)
    nrm = rng.choice([-1.0, 1.0], n)
    if isinstance(law, Euler):
        Ua, Ub = random_euler_states(rng, n), random_euler_states(rng, n)
    else:
        Ua, Ub = rng.uniform(-2, 2, (n, 1)), rng.uniform(-2, 2, (n, 1))
    H = law.numerical_flux(Ua, Ua, nrm, v, x)
    np.testing.assert_allclose(H, law.normal_flux(Ua, nrm, v, x), atol=1e-12 * max(1, np.abs(H).max()))
    s = law.numerical_flux(Ua, Ub, nrm, v, x) + law.numerical_flux(Ub, Ua, -nrm, v, x)
    assert np.max(np.abs(s)) < 1e-12 * max(1.0, np.abs(law.numerical_flux(Ua, Ub, nrm, v, x)).max())
    # Galilean shift for equal traces
    d = law.numerical_flux(Ua, Ua, nrm, v, x) - law.numerical_flux(Ua, Ua, nrm, 0.0, x)
    np.testing.assert_allclose(d, -(v * nrm)[:, None] * Ua, atol=1e-12 * np.abs(Ua).max())


def test_advection_upwind_limit():
    law = Advection(1.0, k=1e8)
    assert law.numerical_flux(np.array([2.0]), np.array([5.0]), 1.0)[0] == pytest.approx(2.0)
    assert law.numerical_flux(np.array([2.0]), np.array([5.0]), -1.0)[0] == pytest.approx(-5.0)


def test_euler_consistency_example():
    U = np.array([1.0, 0.0, 2.0])
    H = Euler(1.4).numerical_flux(U, U, 1.0, 0.3)
    np.testing.assert_allclose(H, [-0.3, 0.8, -0.6], atol=1e-14)


# -- transformed fluxes ----------------------------------------------------------

def test_reference_numerical_flux_examples():
    rng = np.random.default_rng(2)
    law = Euler(1.4)
    Ua, Ub = random_euler_states(rng, 5), random_euler_states(rng, 5)
    np.testing.assert_allclose(
        reference_numerical_flux(law, Ua, Ub, 1.0, np.ones(5), np.ones(5), 0.0),
        law.numerical_flux(Ua, Ub, 1.0, 0.0), rtol=1e-14)
    adv = Advection(1.0)
    val = reference_numerical_flux(adv, np.array([4.0]), np.array([4.0]), 1.0, np.array(2.0), np.array(2.0), 0.0)
    assert val[0] == pytest.approx(2.0)
    # shock frame: flux vanishes when v.n equals the RH speed of a constant state
    U = np.array([3.0])
    b = Burgers(1.0)
    assert reference_numerical_flux(b, U, U, 1.0, np.array(1.0), np.array(1.0), 1.5)[0] == pytest.approx(0.0)
    with pytest.raises(InvertedElementError):
        reference_numerical_flux(adv, np.array([1.0]), np.array([1.0]), 1.0, np.array(1.0), np.array(-1.0))


def test_transformed_flux_examples():
    rng = np.random.default_rng(4)
    law = Euler(1.4)
    W = random_euler_states(rng, 3)
    np.testing.assert_allclose(transformed_flux(law, W, np.ones(3)), law.flux(W), rtol=1e-14)
    assert transformed_flux(Advection(1.0), np.array([4.0]), np.array(2.0))[0, 0] == pytest.approx(2.0)
    np.testing.assert_allclose(transformed_flux(Burgers(1.0), np.array([0.0]), np.array(1.5), v=0.7), 0.0)
    with pytest.raises(InvertedElementError):
        transformed_flux(Burgers(1.0), np.array([1.0]), np.array(0.0))


# -- Rankine-Hugoniot speed --------------------------------------------------------

def test_rankine_hugoniot_examples():
    assert rankine_hugoniot_speed(Burgers(1.0), [2.0], [0.0], 1.0) == pytest.approx(1.0)
    assert rankine_hugoniot_speed(Advection(1.7), [3.0], [-1.0], 1.0) == pytest.approx(1.7)
    law = Euler(1.4)
    UL = law.to_conservative(3.857143, 2.629369, 10.3333)
    UR = law.to_conservative(1.0, 0.0, 1.0)
    # normal-shock relations for a Mach 3 shock into (1, 0, 1)
    assert rankine_hugoniot_speed(law, UL, UR, 1.0) == pytest.approx(3.0 * np.sqrt(1.4), abs=2e-4)


def test_rankine_hugoniot_degenerate_jump():
    with pytest.raises(DegenerateJumpError):
        rankine_hugoniot_speed(Burgers(1.0), [1.0], [1.0 + 1e-12], 1.0)
