"""Independent reference solutions and error metrics.

None of these routines share code with the tracking discretization: the
advection and Burgers oracles integrate characteristics with classical RK4,
and the Euler oracle is a first-order HLL finite-volume scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import gauss_legendre


def rk4(f, y0, t0: float, t1: float, n_steps: int):
    """Classical RK4 for ``y' = f(t, y)`` (vectorized ``y``)."""
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / n_steps
    t = t0
    for _ in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


@dataclass
class CharacteristicsReference:
    """Exact-up-to-RK4 solution of ``U_t + (beta(x) U)_x = 0`` on a periodic interval.

    ``initial`` maps positions already reduced into ``[a, b)`` to states.
    Along ``dx/dt = beta`` the flux ``beta*U`` is invariant, so
    ``U(x, t) = U0(X0) beta(X0) / beta(x)`` with ``X0`` the foot of the
    characteristic.
    """

    beta: object
    initial: object
    shock0: float = 0.5
    domain: tuple = (0.0, 1.0)
    n_steps: int = 10000

    def foot(self, x, t: float) -> np.ndarray:
        return rk4(lambda s, X: -self.beta(X), np.asarray(x, dtype=float), 0.0, t, self.n_steps)

    def shock_location(self, t: float) -> float:
        a, b = self.domain
        xs = rk4(lambda s, X: self.beta(X), np.array([self.shock0]), 0.0, t, self.n_steps)[0]
        return a + (xs - a) % (b - a)

    def __call__(self, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if t == 0:
            X0 = x
        else:
            X0 = self.foot(x.reshape(-1), t).reshape(x.shape)
        a, b = self.domain
        Xm = a + (X0 - a) % (b - a)
        return self.initial(Xm) * self.beta(X0) / self.beta(x)


def characteristics_reference(beta, initial, t: float, x, shock0: float = 0.5,
                              domain=(0.0, 1.0), n_steps: int = 10000):
    """State values at ``x`` and the shock location at time ``t``."""
    ref = CharacteristicsReference(beta, initial, shock0, domain, n_steps)
    return ref(x, t), ref.shock_location(t)


def burgers_left_state(u0, du0, x, t: float, x0_guess=None, tol: float = 1e-14) -> np.ndarray:
    """Solve ``x0 + u0(x0) t = x`` by Newton and return ``u0(x0)``."""
    x = np.asarray(x, dtype=float)
    x0 = x.copy() if x0_guess is None else np.asarray(x0_guess, dtype=float).copy()
    for _ in range(100):
        res = x0 + u0(x0) * t - x
        dx0 = -res / (1.0 + du0(x0) * t)
        x0 = x0 + dx0
        if np.max(np.abs(dx0)) < tol * max(1.0, float(np.max(np.abs(x0)))):
            break
    return u0(x0)


def burgers_shock_oracle(t: float, u0=None, du0=None, shock0: float = 0.0,
                         right_state: float = 0.0, n_steps: int = 10000) -> float:
    """Shock position from ``dx_s/dt = (u_L + u_R)/2`` with characteristic left data.

    Defaults to the left data ``2 (x + 1)^2`` with the shock starting at 0.
    """
    if u0 is None:
        u0 = lambda z: 2.0 * (z + 1.0) ** 2  # noqa: E731
        du0 = lambda z: 4.0 * (z + 1.0)  # noqa: E731

    def rhs(s, xs):
        return 0.5 * (burgers_left_state(u0, du0, xs, s) + right_state)

    return float(rk4(rhs, np.array([shock0]), 0.0, t, n_steps)[0])


# -- Euler finite-volume oracle ----------------------------------------------

def _euler_flux(U, gamma):
    rho, m, E = U
    v = m / rho
    P = (gamma - 1.0) * (E - 0.5 * rho * v * v)
    return np.array([m, m * v + P, (E + P) * v]), v, np.sqrt(gamma * P / rho)


def _hll(UL, UR, gamma):
    FL, vL, cL = _euler_flux(UL, gamma)
    FR, vR, cR = _euler_flux(UR, gamma)
    sL = np.minimum(vL - cL, vR - cR)
    sR = np.maximum(vL + cL, vR + cR)
    Fm = (sR * FL - sL * FR + sL * sR * (UR - UL)) / (sR - sL)
    F = np.where(sL >= 0, FL, np.where(sR <= 0, FR, Fm))
    return F, np.maximum(np.abs(sL), np.abs(sR))


@dataclass
class FiniteVolumeResult:
    x: np.ndarray
    U: np.ndarray
    shock_position: float

    @property
    def density(self) -> np.ndarray:
        return self.U[0]


def shu_osher_fv_oracle(t_final: float = 1.1, n_cells: int = 20000, cfl: float = 0.8,
                        gamma: float = 1.4, domain=(-4.5, 4.5), left=(3.857143, 2.629369, 10.3333),
                        x_shock0: float = -4.0) -> FiniteVolumeResult:
    """First-order HLL finite volumes for the Shu-Osher problem.

    Left: inflow with the post-shock state.  Right: reflecting wall (zero
    velocity).  The shock is located at the maximum density gradient.
    """
    a, b = domain
    dx = (b - a) / n_cells
    xc = a + dx * (np.arange(n_cells) + 0.5)
    rho = np.where(xc < x_shock0, left[0], 1.0 + 0.2 * np.sin(5.0 * xc))
    v = np.where(xc < x_shock0, left[1], 0.0)
    P = np.where(xc < x_shock0, left[2], 1.0)
    U = np.array([rho, rho * v, P / (gamma - 1.0) + 0.5 * rho * v * v])
    rl, vl, pl = left
    UL_bc = np.array([rl, rl * vl, pl / (gamma - 1.0) + 0.5 * rl * vl * vl])
    t = 0.0
    while t < t_final - 1e-14:
        Ug = np.empty((3, n_cells + 2))
        Ug[:, 1:-1] = U
        Ug[:, 0] = UL_bc
        Ug[:, -1] = U[:, -1] * np.array([1.0, -1.0, 1.0])
        F, smax = _hll(Ug[:, :-1], Ug[:, 1:], gamma)
        dt = min(cfl * dx / float(np.max(smax)), t_final - t)
        U = U - (dt / dx) * (F[:, 1:] - F[:, :-1])
        t += dt
    grad = np.abs(np.diff(U[0]))
    k = int(np.argmax(grad))
    return FiniteVolumeResult(xc, U, float(0.5 * (xc[k] + xc[k + 1])))


# -- error metrics -----------------------------------------------------------

def l1_error(dg, u, x, reference, n_points: int | None = None) -> float:
    """``int |U_h - U_ref| dx`` by per-element Gauss quadrature on the physical mesh.

    ``reference`` maps physical positions ``(E, nq)`` to states ``(E, nq, m)``
    (or ``(E, nq)`` for scalar laws).
    """
    nq = 2 * dg.p + 3 if n_points is None else n_points
    xi, wq = gauss_legendre(nq)
    xq, Uh = dg.physical_values(u, x, xi)
    mel = dg.mesh.element
    dxdxi = np.asarray(x)[dg.conn] @ mel.grad(xi)[..., 0].T
    Ur = np.asarray(reference(xq)).reshape(Uh.shape)
    return float(np.einsum("q,eq,eqc->", wq, dxdxi, np.abs(Uh - Ur)))


def error_metrics(dg, u, x, reference, shock_position, reference_shock) -> dict:
    return {
        "l1_solution_error": l1_error(dg, u, x, reference),
        "shock_location_error": float(np.max(np.abs(np.asarray(shock_position) - reference_shock))),
    }
