"""Built-in benchmark problems with their default settings."""

from __future__ import annotations

import numpy as np

from .dg import Dirichlet, PrescribedVelocity
from .laws import Advection, Burgers, Euler
from .mesh import interval_mesh
from .optimizer import SqpSettings
from .timeloop import PiecewiseState, ProblemSetup

SHU_OSHER_LEFT = (3.857143, 2.629369, 10.3333)


def advection_beta(x):
    return 1.0 + 0.5 * np.sin(2.0 * np.pi * np.asarray(x)) ** 2


def advec1d(n_elements=20, p=4, q=1, scheme="dirk3", n_steps=25, t_final=0.25,
            eps1=1e-6, eps2=1e-8, beta=advection_beta, pieces=None) -> ProblemSetup:
    """Periodic advection on [0, 1] with a tracked jump at x = 0.5."""
    if n_elements % 2:
        raise ValueError("advec1d needs an even element count so 0.5 is a face")
    mesh = interval_mesh([(0.0, 1.0, n_elements)], q=q, periodic=True, shock_at=[0.5])
    if pieces is None:
        pieces = [lambda x: np.sin(np.pi * x), lambda x: np.sin(np.pi * (x - 1.0))]
    ic = PiecewiseState([0.5], pieces)
    return ProblemSetup("advec1d", Advection(beta), mesh, ic, p, "periodic", t_final, n_steps,
                        scheme, SqpSettings(eps1, eps2))


def burgers_initial_left(x):
    return 2.0 * (np.asarray(x) + 1.0) ** 2


def burgers1d(n_elements=20, p=4, q=1, scheme="dirk3", n_steps=20, t_final=1.0,
              eps1=1e-6, eps2=1e-8) -> ProblemSetup:
    """Burgers on [-1, 1] with zero Dirichlet data and a tracked jump at 0."""
    if n_elements % 2:
        raise ValueError("burgers1d needs an even element count so 0 is a face")
    mesh = interval_mesh([(-1.0, 1.0, n_elements)], q=q, shock_at=[0.0])
    ic = PiecewiseState([0.0], [burgers_initial_left, lambda x: np.zeros_like(x)])
    bc = (Dirichlet([0.0]), Dirichlet([0.0]))
    return ProblemSetup("burgers1d", Burgers(1.0), mesh, ic, p, bc, t_final, n_steps,
                        scheme, SqpSettings(eps1, eps2))


def shuosher(n_elements=288, p=4, q=1, scheme="dirk3", n_steps=110, t_final=1.1,
             eps1=1e-4, eps2=1e-8, gamma=1.4) -> ProblemSetup:
    """Mach 3 shock entering a sinusoidal density field on [-4.5, 4.5]."""
    if n_elements % 2:
        raise ValueError("shuosher needs an even element count")
    law = Euler(gamma)
    half = n_elements // 2
    mesh = interval_mesh([(-4.5, -4.0, half), (-4.0, 4.5, half)], q=q, shock_at=[-4.0])
    left = law.to_conservative(*SHU_OSHER_LEFT)

    def right(x):
        x = np.asarray(x)
        rho = 1.0 + 0.2 * np.sin(5.0 * x)
        return law.to_conservative(rho, np.zeros_like(x), np.ones_like(x))

    ic = PiecewiseState([-4.0], [lambda x: np.tile(left, (np.size(x), 1)), right])
    bc = (Dirichlet(left), PrescribedVelocity(0.0))
    return ProblemSetup("shuosher", law, mesh, ic, p, bc, t_final, n_steps,
                        scheme, SqpSettings(eps1, eps2))


PROBLEMS = {"advec1d": advec1d, "burgers1d": burgers1d, "shuosher": shuosher}
