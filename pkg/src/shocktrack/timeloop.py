"""Method-of-lines time loop: initialization, stage guesses and stepping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dg import DGDiscretization
from .dirk import StageProblem, advance_step, tableau
from .errors import SetupError, StageFailureError
from .laws import rankine_hugoniot_speed
from .mesh import (
    MovingMesh,
    advect_shock_nodes,
    check_validity,
    jacobian_ratio_at_nodes,
    smooth_mesh,
)
from .optimizer import SqpSettings, default_resmooth, solve_stage

log = logging.getLogger(__name__)


@dataclass
class PiecewiseState:
    """Initial physical state made of smooth pieces separated by ``breaks``.

    Each piece maps an array of positions ``(n,)`` to states ``(n, m)``.  The
    piece used on an element is chosen by the element center, so the
    discontinuities are represented exactly when they sit on element faces.
    """

    breaks: Sequence[float]
    pieces: Sequence[Callable]

    def __post_init__(self):
        if len(self.pieces) != len(self.breaks) + 1:
            raise SetupError("need one more piece than breakpoints")

    def piece_index(self, xc) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breaks, dtype=float), xc)

    def __call__(self, x, xc) -> np.ndarray:
        """States at positions ``x`` ``(E, n)`` on elements with centers ``xc``."""
        x = np.asarray(x, dtype=float)
        idx = self.piece_index(np.asarray(xc))
        out = None
        for k, f in enumerate(self.pieces):
            sel = idx == k
            if not np.any(sel):
                continue
            vals = np.asarray(f(x[sel].reshape(-1)), dtype=float).reshape(x[sel].size, -1)
            if out is None:
                out = np.zeros(x.shape + (vals.shape[-1],))
            out[sel] = vals.reshape(x[sel].shape + (vals.shape[-1],))
        return out


@dataclass
class ProblemSetup:
    name: str
    law: object
    mesh: MovingMesh
    initial_state: PiecewiseState
    p: int
    bc: object
    t_final: float
    n_steps: int
    scheme: str = "dirk3"
    sqp: SqpSettings = field(default_factory=SqpSettings)
    track: bool = True

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    coords: list = field(default_factory=list)
    shock_positions: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    dg: DGDiscretization | None = None

    def append(self, t, u, x, shocks):
        self.times.append(float(t))
        self.states.append(np.array(u))
        self.coords.append(np.array(x))
        self.shock_positions.append(np.array(shocks, dtype=float))

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iterations for r in self.reports], dtype=int)


def initialize(setup: ProblemSetup):
    """DG operator, initial state coefficients and mesh coordinates.

    Nodal interpolation of the initial physical state scaled by ``g = 1``.
    """
    mesh = setup.mesh
    if mesh.dim != 1:
        raise SetupError("the time loop supports 1D meshes only")
    X = mesh.ref_coords
    for b in setup.initial_state.breaks:
        verts = X[mesh.vertex_nodes()]
        if not np.any(np.isclose(verts, b, atol=1e-12)):
            raise SetupError(f"initial discontinuity at {b} does not lie on an element face")
    if setup.track:
        missing = [b for b in setup.initial_state.breaks
                   if not np.any(np.isclose(X[mesh.shock_nodes], b, atol=1e-12))]
        if missing:
            raise SetupError(f"discontinuities {missing} are not marked as shock nodes")
    dg = DGDiscretization(setup.law, mesh, setup.p, setup.bc)
    xs = dg.solution_nodes(X)
    xc = 0.5 * (X[mesh.connectivity[:, 0]] + X[mesh.connectivity[:, -1]])
    U = setup.initial_state(xs, xc)
    u0 = U.reshape(-1)
    if u0.size != dg.n_u:
        raise SetupError("initial state has the wrong number of components")
    return dg, u0, X.copy()


def shock_traces(dg: DGDiscretization, u, x):
    """Physical left/right states at each shock node, ``(n_shock, 2, m)``."""
    mesh = dg.mesh
    _, U_end = dg.physical_values(u, x, [-1.0, 1.0])
    out = []
    for s in mesh.shock_nodes:
        left = np.flatnonzero(mesh.connectivity[:, -1] == s)
        right = np.flatnonzero(mesh.connectivity[:, 0] == s)
        if len(left) != 1 or len(right) != 1:
            raise SetupError(f"shock node {s} is not an interior face")
        out.append((U_end[left[0], 1], U_end[right[0], 0]))
    return np.array(out)


def shock_speeds(dg: DGDiscretization, u, x) -> np.ndarray:
    tr = shock_traces(dg, u, x)
    xs = np.asarray(x)[dg.mesh.shock_nodes]
    return np.array([
        rankine_hugoniot_speed(dg.law, UL, UR, 1.0, np.array([xi]))
        for (UL, UR), xi in zip(tr, xs)
    ])


def stage_initial_guess(dg: DGDiscretization, u_n, x_n, speeds, dt_stage: float):
    """Advect shock nodes with the frozen speeds, smooth, transfer the state."""
    mesh = dg.mesh
    y = advect_shock_nodes(mesh, x_n, speeds, dt_stage)
    verts = mesh.vertex_nodes()
    fixed = y[verts[np.isin(verts, mesh.fixed_nodes())]]
    if np.any(np.diff(fixed) <= 0):
        raise StageFailureError("shock node advection crossed a boundary or another shock; reduce the time step")
    y = smooth_mesh(mesh, y)
    val = check_validity(mesh, y)
    if not val.valid:
        raise StageFailureError(f"initial mesh guess inverted element {val.worst_element}")
    ratio = jacobian_ratio_at_nodes(mesh, y, x_n, dg.trial.nodes)
    w = (dg.as_blocks(u_n) * ratio[:, :, None]).reshape(-1)
    return w, y


def shock_positions(mesh: MovingMesh, x) -> np.ndarray:
    return np.asarray(x)[mesh.shock_nodes]


def run(setup: ProblemSetup, callback=None, record_every: int = 1) -> TrajectoryRecord:
    """Integrate to ``t_final``.

    On failure the :class:`StageFailureError` carries the partial trajectory
    as ``exc.record``.
    """
    dg, u, x = initialize(setup)
    tab = tableau(setup.scheme)
    dt = setup.dt
    settings = setup.sqp
    if not setup.track:
        settings = replace(settings, free_nodes=np.zeros(0, dtype=int))
    rec = TrajectoryRecord()
    rec.dg = dg
    rec.append(0.0, u, x, shock_positions(dg.mesh, x))
    t = 0.0
    for n in range(setup.n_steps):
        speeds = shock_speeds(dg, u, x) if setup.track else np.zeros(0)
        su, sx = [], []
        for i in range(tab.s):
            sp = StageProblem(dg, tab, i, dt, u, x, su, sx, n=n)
            try:
                if setup.track:
                    w0, y0 = stage_initial_guess(dg, u, x, speeds, tab.c[i] * dt)
                else:
                    w0, y0 = (su[-1] if su else u), x.copy()
                w, y, rep = solve_stage(sp, w0, y0, settings, resmooth=default_resmooth(sp))
            except StageFailureError as exc:
                if exc.report is not None:
                    exc.report.step, exc.report.stage = n, i
                    rec.reports.append(exc.report)
                exc.record = rec
                raise
            rec.reports.append(rep)
            su.append(w)
            sx.append(y)
        u, x = advance_step(tab, u, x, su, sx)
        t = (n + 1) * dt
        if (n + 1) % record_every == 0 or n + 1 == setup.n_steps:
            rec.append(t, u, x, shock_positions(dg.mesh, x))
        if callback is not None:
            callback(n, t, u, x)
        log.info("step %d t=%.4f shocks=%s", n + 1, t, shock_positions(dg.mesh, x))
    return rec
