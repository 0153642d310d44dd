from __future__ import annotations

import numpy as np
import pytest

from shocktrack.errors import SetupError, StageFailureError
from shocktrack.laws import Advection
from shocktrack.mesh import interval_mesh
from shocktrack.optimizer import SqpSettings
from shocktrack.problems import advec1d, burgers1d
from shocktrack.reference import error_metrics
from shocktrack.timeloop import PiecewiseState, ProblemSetup, initialize, run, shock_speeds, stage_initial_guess


def g(z):
    return 1.0 + z + z ** 2


def polynomial_pieces():
    # one quadratic on the periodic interval cut at the tracked jump, so x = 0 is smooth
    return [g, lambda x: g(x - 1.0)]


def test_piecewise_state_selects_piece_by_center():
    ic = PiecewiseState([0.5], [lambda x: 0 * x + 1.0, lambda x: 0 * x + 2.0])
    out = ic(np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([0.25, 0.75]))
    np.testing.assert_array_equal(out[..., 0], [[1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(SetupError):
        PiecewiseState([0.5], [lambda x: x])


def test_break_must_sit_on_a_face():
    setup = advec1d(4, p=2)
    setup.initial_state = PiecewiseState([0.3], setup.initial_state.pieces)
    with pytest.raises(SetupError):
        initialize(setup)


def test_initial_guess_translates_shock():
    setup = advec1d(10, p=2, beta=lambda x: 1.0 + 0 * np.asarray(x), pieces=polynomial_pieces())
    dg, u, x = initialize(setup)
    s = shock_speeds(dg, u, x)
    assert s[0] == pytest.approx(1.0)
    w, y = stage_initial_guess(dg, u, x, s, 0.02)
    assert y[dg.mesh.shock_nodes[0]] == pytest.approx(0.52)


def two_jump_setup(scheme, n_steps=5, t_final=0.1):
    mesh = interval_mesh([(0.0, 1.0, 12)], periodic=True, shock_at=[0.25, 0.75])
    ic = PiecewiseState([0.25, 0.75], [lambda x: 1.0 + 0 * x, lambda x: 3.0 + 0 * x, lambda x: 1.0 + 0 * x])
    return ProblemSetup("advec1d", Advection(1.0), mesh, ic, 3, "periodic", t_final, n_steps, scheme,
                        SqpSettings(1e-10, 1e-12))


@pytest.mark.parametrize("scheme", ["dirk1", "dirk2", "dirk3"])
def test_constant_speed_piecewise_constant_is_exact(scheme):
    rec = run(two_jump_setup(scheme))
    t = rec.times[-1]

    def exact(q):
        return np.where((q - t > 0.25) & (q - t < 0.75), 3.0, 1.0)

    shocks = rec.shock_positions[-1]
    m = error_metrics(rec.dg, rec.states[-1], rec.coords[-1], exact, shocks, np.array([0.25, 0.75]) + t)
    assert m["shock_location_error"] < 1e-8
    assert m["l1_solution_error"] < 1e-8


def test_constant_speed_quadratic_tracks_shock_exactly():
    # elements between the fixed endpoint and the shock stretch linearly in time, so the
    # state is not exact in time for degree >= 1 data; the shock location still is
    setup = advec1d(10, p=3, n_steps=5, t_final=0.1, eps1=1e-10, eps2=1e-12,
                    beta=lambda x: 1.0 + 0 * np.asarray(x), pieces=polynomial_pieces())
    rec = run(setup)
    assert abs(rec.shock_positions[-1][0] - 0.6) < 1e-8


def test_record_every_and_reports():
    setup = burgers1d(10, p=2, n_steps=4, t_final=0.2, scheme="dirk2")
    rec = run(setup, record_every=3)
    assert rec.times == pytest.approx([0.0, 0.15, 0.2])
    assert len(rec.reports) == 4 * 2
    assert all(r.converged for r in rec.reports)
    assert rec.iterations.shape == (8,)


def test_failure_carries_partial_record():
    setup = burgers1d(10, p=2, n_steps=4, t_final=0.2, scheme="dirk2")
    setup.sqp = SqpSettings(eps1=1e-30, eps2=1e-30, max_iters=1)
    with pytest.raises(StageFailureError) as exc:
        run(setup)
    rec = exc.value.record
    assert rec.times == [0.0] and rec.reports[-1].step == 0 and rec.reports[-1].stage == 0


def test_untracked_run_keeps_mesh_fixed():
    setup = burgers1d(10, p=2, n_steps=2, t_final=0.05, scheme="dirk1")
    setup.track = False
    rec = run(setup)
    np.testing.assert_array_equal(rec.coords[-1], rec.coords[0])


def test_initial_guess_identity_and_compression():
    setup = burgers1d(10, p=2)
    dg, u, x = initialize(setup)
    w, y = stage_initial_guess(dg, u, x, np.zeros(1), 0.1)
    np.testing.assert_allclose(y, x, rtol=0, atol=1e-15)
    np.testing.assert_allclose(w, u, rtol=1e-14, atol=1e-14)
    # shock advanced to 0.5: every element on the right is compressed by half
    w, y = stage_initial_guess(dg, u, x, np.array([1.0]), 0.5)
    right = dg.as_blocks(w)[5:]
    np.testing.assert_allclose(right, 0.5 * dg.as_blocks(u)[5:], atol=1e-15)
    left = dg.as_blocks(w)[:5]
    np.testing.assert_allclose(left, 1.5 * dg.as_blocks(u)[:5], rtol=1e-14)
