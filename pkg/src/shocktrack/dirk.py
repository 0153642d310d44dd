"""Diagonally implicit Runge-Kutta schemes for the coupled state/mesh system.

Stage indices are zero-based throughout (``i = 0`` is the first stage).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import TableauError


@dataclass(frozen=True)
class ButcherTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    Ainv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if np.any(np.abs(np.diag(A)) == 0) or np.any(np.triu(A, 1) != 0):
            raise TableauError("A must be lower triangular with a nonzero diagonal")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        Ainv = sla.solve_triangular(A, np.eye(len(A)), lower=True)
        object.__setattr__(self, "Ainv", Ainv)

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def stiffly_accurate(self) -> bool:
        return bool(np.allclose(self.A[-1], self.b, atol=1e-14, rtol=0))

    def stability_function(self, z):
        """``R(z) = 1 + z b^T (I - z A)^{-1} 1``."""
        one = np.ones(self.s)
        return 1.0 + z * self.b @ np.linalg.solve(np.eye(self.s) - z * self.A, one)


def tableau(scheme: str) -> ButcherTableau:
    scheme = scheme.lower()
    if scheme == "dirk1":
        return ButcherTableau("dirk1", [[1.0]], [1.0], [1.0], 1)
    if scheme == "dirk2":
        a = 1.0 - 1.0 / np.sqrt(2.0)
        return ButcherTableau("dirk2", [[a, 0.0], [1.0 - a, a]], [1.0 - a, a], [a, 1.0], 2)
    if scheme == "dirk3":
        be = 0.435866521508459
        ga = -(6.0 * be**2 - 16.0 * be + 1.0) / 4.0
        om = (6.0 * be**2 - 20.0 * be + 5.0) / 4.0
        A = [[be, 0.0, 0.0], [(1.0 + be) / 2.0 - be, be, 0.0], [ga, om, be]]
        return ButcherTableau("dirk3", A, [ga, om, be], [be, (1.0 + be) / 2.0, ga + om + be], 3)
    raise TableauError(f"unknown DIRK scheme '{scheme}'")


class StageProblem:
    """Frozen context of stage ``i`` of step ``n`` with the stage maps and residuals.

    ``dg`` is a :class:`~shocktrack.dg.DGDiscretization`; ``prev_u``/``prev_x``
    hold the converged earlier stages of the same step.
    """

    def __init__(self, dg, tab: ButcherTableau, i: int, dt: float, u_n, x_n,
                 prev_u=(), prev_x=(), n: int = 0):
        if dt <= 0:
            raise ValueError("time step must be positive")
        if len(prev_u) != i or len(prev_x) != i:
            raise ValueError(f"stage {i} needs {i} previous stages")
        self.dg = dg
        self.tab = tab
        self.i = i
        self.n = n
        self.dt = dt
        self.u_n = np.asarray(u_n, dtype=float)
        self.x_n = np.asarray(x_n, dtype=float)
        self.prev_u = [np.asarray(v, dtype=float) for v in prev_u]
        self.prev_x = [np.asarray(v, dtype=float) for v in prev_x]
        Ai = tab.Ainv[i]
        self.aii = Ai[i]
        self._u_shift = sum((Ai[j] * (self.prev_u[j] - self.u_n) for j in range(i)), np.zeros_like(self.u_n))
        self._x_shift = sum((Ai[j] * (self.prev_x[j] - self.x_n) for j in range(i)), np.zeros_like(self.x_n))

    @property
    def time(self) -> float:
        return self.tab.c[self.i] * self.dt

    def xi(self, w) -> np.ndarray:
        return self.aii * (np.asarray(w) - self.u_n) + self._u_shift

    def zeta(self, y) -> np.ndarray:
        return (self.aii * (np.asarray(y) - self.x_n) + self._x_shift) / self.dt

    def residual(self, w, y, key="p", kern=None) -> np.ndarray:
        dg = self.dg
        nu = self.zeta(y)
        return dg.mass_matrix(key) @ self.xi(w) + self.dt * dg.spatial_term(w, y, nu, key, kern)

    def enriched_residual(self, w, y, kern=None) -> np.ndarray:
        return self.residual(w, y, "e", kern)

    def kernels(self, w, y, jac=True):
        return self.dg.kernels(w, y, self.zeta(y), jac=jac)

    def jacobians(self, w, y, key="p", kern=None) -> dict:
        """``dr/dw`` and ``dr/dy`` (or the enriched ones for ``key='e'``)."""
        dg = self.dg
        J = dg.jacobians(w, y, self.zeta(y), key, kern)
        return {
            "dw": (self.aii * dg.mass_matrix(key) + self.dt * J["du"]).tocsc(),
            "dy": (self.dt * J["dx"] + self.aii * J["dnu"]).tocsc(),
        }

    def evaluate(self, w, y, jac=True) -> dict:
        """Both residuals (and Jacobians) from one kernel evaluation."""
        kern = self.kernels(w, y, jac=jac)
        out = {"r": self.residual(w, y, "p", kern), "R": self.residual(w, y, "e", kern)}
        if jac:
            jr = self.jacobians(w, y, "p", kern)
            jR = self.jacobians(w, y, "e", kern)
            out.update(r_w=jr["dw"], r_y=jr["dy"], R_w=jR["dw"], R_y=jR["dy"])
        return out


def stage_updates(tab: ButcherTableau, base, stages) -> list[np.ndarray]:
    """Recover ``k_j`` from stage values: ``k_j = sum_l Ainv_jl (stage_l - base)``."""
    diffs = [np.asarray(s) - base for s in stages]
    return [sum(tab.Ainv[j, l] * diffs[l] for l in range(j + 1)) for j in range(len(stages))]


def advance_step(tab: ButcherTableau, u_n, x_n, stage_u, stage_x, tol: float = 1e-10):
    """Step update; stiffly accurate shortcut checked against ``u_n + sum b_j k_j``."""
    from .errors import TableauError as _TE

    u_n = np.asarray(u_n)
    x_n = np.asarray(x_n)
    ku = stage_updates(tab, u_n, stage_u)
    kx = stage_updates(tab, x_n, stage_x)
    u_gen = u_n + sum(b * k for b, k in zip(tab.b, ku))
    x_gen = x_n + sum(b * k for b, k in zip(tab.b, kx))
    if not tab.stiffly_accurate:
        return u_gen, x_gen
    u_new, x_new = np.asarray(stage_u[-1]), np.asarray(stage_x[-1])
    scale = max(1.0, float(np.max(np.abs(u_new))))
    du = float(np.max(np.abs(u_new - u_gen)))
    dx = float(np.max(np.abs(x_new - x_gen))) if x_new.size else 0.0
    if du > tol * scale or dx > tol * max(1.0, float(np.max(np.abs(x_new)))):
        raise _TE(f"stiffly-accurate update disagrees with general update ({du:.3e}, {dx:.3e})")
    return u_new.copy(), x_new.copy()


def integrate_ode(tab: ButcherTableau, rhs, drhs, u0, t_final: float, n_steps: int,
                  newton_tol: float = 1e-14, max_newton: int = 50):
    """DIRK integration of ``u' = rhs(t, u)`` (small dense systems).

    Uses the same stage-update residual ``xi(w) - dt*rhs`` as the tracked
    solver, solved by Newton's method.
    """
    u = np.atleast_1d(np.asarray(u0))
    u = u.astype(np.result_type(u.dtype, float))
    dt = t_final / n_steps
    t = 0.0
    for _ in range(n_steps):
        stages = []
        for i in range(tab.s):
            Ai = tab.Ainv[i]
            shift = sum((Ai[j] * (stages[j] - u) for j in range(i)), np.zeros_like(u))
            ti = t + tab.c[i] * dt
            w = u.copy() if not stages else stages[-1].copy()
            for _ in range(max_newton):
                res = Ai[i] * (w - u) + shift - dt * rhs(ti, w)
                Jm = Ai[i] * np.eye(len(u)) - dt * np.atleast_2d(drhs(ti, w))
                dw = np.linalg.solve(Jm, -res)
                w = w + dw
                if np.max(np.abs(dw)) <= newton_tol * max(1.0, np.max(np.abs(w))):
                    break
            stages.append(w)
        ku = stage_updates(tab, u, stages)
        u = u + sum(b * k for b, k in zip(tab.b, ku))
        t += dt
    return u
