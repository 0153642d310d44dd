"""Per-stage tracking optimization.

Each stage solves

    minimize  1/2 |R(w, y)|^2   subject to   r(w, y) = 0

with a Levenberg-Marquardt SQP method and unit step length.  The QP is
solved in reduced (null-space) form: the linearized constraint eliminates
the state update, leaving a small symmetric positive definite system in the
free mesh coordinates.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import (
    InadmissibleStateError,
    InvertedElementError,
    LinearSolveError,
    StageFailureError,
    StepFailureError,
)
from .laws import Euler
from .mesh import check_validity, smooth_mesh

log = logging.getLogger(__name__)


MESH_POLICIES = ("slaved", "all", "shock")


@dataclass
class SqpSettings:
    """Tolerances and mesh-update policy of the per-stage SQP solver.

    ``mesh_policy`` selects the mesh degrees of freedom of the QP:
    ``"all"`` frees every non-boundary node, ``"shock"`` only the shock
    nodes, and ``"slaved"`` frees the shock nodes while the remaining nodes
    follow them through the (affine, 1D) smoothing map.  ``free_nodes``
    overrides the policy with an explicit list of coordinate indices.
    """

    eps1: float = 1e-6
    eps2: float = 1e-8
    max_iters: int = 50
    lm_gamma: float = 1e-2
    mesh_policy: str = "slaved"
    free_nodes: np.ndarray | None = None
    max_boosts: int = 5

    def __post_init__(self):
        if min(self.eps1, self.eps2, self.lm_gamma) <= 0:
            raise ValueError("eps1, eps2 and lm_gamma must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.mesh_policy not in MESH_POLICIES:
            raise ValueError(f"unknown mesh policy '{self.mesh_policy}'")


@dataclass
class SqpReport:
    iterations: int = 0
    constraint_norm_history: list = field(default_factory=list)
    optimality_norm_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    converged: bool = False
    step: int | None = None
    stage: int | None = None

    def record(self, rn, cn, obj):
        self.constraint_norm_history.append(float(rn))
        self.optimality_norm_history.append(float(cn))
        self.objective_history.append(float(obj))
        self.iterations = len(self.objective_history) - 1

    def to_json(self) -> str:
        def last(h):
            return h[-1] if h else None

        return json.dumps(
            {
                "step": self.step,
                "stage": self.stage,
                "iterations": self.iterations,
                "constraint_norm": last(self.constraint_norm_history),
                "optimality_norm": last(self.optimality_norm_history),
                "objective": last(self.objective_history),
                "converged": self.converged,
            }
        )


def free_coordinates(sp, settings: SqpSettings | None = None) -> np.ndarray:
    """Coordinate indices moved by the QP (before any slaving)."""
    mesh = sp.dg.mesh
    if settings is not None and settings.free_nodes is not None:
        return np.asarray(settings.free_nodes, dtype=int)
    policy = "all" if settings is None else settings.mesh_policy
    if policy == "all":
        nodes = np.setdiff1d(np.arange(mesh.n_nodes), mesh.boundary_nodes())
    else:
        nodes = np.setdiff1d(mesh.shock_nodes, mesh.boundary_nodes())
    return np.repeat(nodes * mesh.dim, mesh.dim) + np.tile(np.arange(mesh.dim), len(nodes))


def mesh_parametrization(sp, settings: SqpSettings | None = None) -> np.ndarray:
    """Matrix ``P`` with mesh updates ``dy = P dtheta``, shape ``(N_x, k)``."""
    mesh = sp.dg.mesh
    free = free_coordinates(sp, settings)
    n_x = mesh.n_nodes * mesh.dim
    P = np.zeros((n_x, len(free)))
    slaved = settings is not None and settings.free_nodes is None and settings.mesh_policy == "slaved"
    if not slaved:
        P[free, np.arange(len(free))] = 1.0
        return P
    if mesh.dim != 1:
        raise ValueError("slaved mesh policy needs the affine 1D smoothing map")
    base = smooth_mesh(mesh, sp.x_n)
    for k, j in enumerate(free):
        e = sp.x_n.copy()
        e[j] += 1.0
        P[:, k] = smooth_mesh(mesh, e) - base
    return P


def mesh_scaling(mesh) -> np.ndarray:
    """Inverse squared reference element size averaged at each 1D node."""
    X = mesh.ref_coords
    h = np.abs(X[mesh.connectivity[:, -1]] - X[mesh.connectivity[:, 0]])
    acc = np.zeros(mesh.n_nodes)
    cnt = np.zeros(mesh.n_nodes)
    np.add.at(acc, mesh.connectivity, (1.0 / h**2)[:, None])
    np.add.at(cnt, mesh.connectivity, 1.0)
    return acc / cnt


def objective(sp, w, y) -> tuple[float, np.ndarray, np.ndarray]:
    """``1/2 |R|^2`` and its gradients ``J^T R``."""
    ev = sp.evaluate(w, y)
    R = ev["R"]
    return 0.5 * float(R @ R), ev["R_w"].T @ R, ev["R_y"].T @ R


def _factor(A):
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise LinearSolveError(f"stage Jacobian is singular: {exc}") from exc
    return lu


def multiplier_estimate(sp, w, y, ev=None, lu=None) -> np.ndarray:
    """Adjoint estimate ``(dr/dw)^{-T} (df/dw)^T``."""
    ev = sp.evaluate(w, y) if ev is None else ev
    lu = _factor(ev["r_w"]) if lu is None else lu
    gw = ev["R_w"].T @ ev["R"]
    return lu.solve(gw, trans="T")


def reduced_optimality(sp, w, y, ev=None, lu=None) -> np.ndarray:
    """``c = (df/dy)^T - (dr/dy)^T lambda_hat`` over all coordinates."""
    ev = sp.evaluate(w, y) if ev is None else ev
    lam = multiplier_estimate(sp, w, y, ev, lu)
    return ev["R_y"].T @ ev["R"] - ev["r_y"].T @ lam


class _Iterate:
    """Residuals, Jacobians, factorization and reduced quantities at one point."""

    def __init__(self, sp, w, y, P):
        self.ev = ev = sp.evaluate(w, y)
        for key in ("r", "R"):
            if not np.all(np.isfinite(ev[key])):
                raise StepFailureError(f"non-finite entries in residual '{key}'")
        self.lu = _factor(ev["r_w"])
        r, R = ev["r"], ev["R"]
        self.a = -self.lu.solve(r)
        if P.shape[1]:
            self.S = -self.lu.solve(np.asarray(ev["r_y"] @ P))
            self.Jred = ev["R_w"] @ self.S + np.asarray(ev["R_y"] @ P)
        else:
            self.S = np.zeros((len(r), 0))
            self.Jred = np.zeros((len(R), 0))
        self.c_red = self.Jred.T @ R
        self.rnorm = float(np.linalg.norm(r))
        self.cnorm = float(np.linalg.norm(self.c_red))
        self.obj = 0.5 * float(R @ R)


def sqp_step(sp, w, y, settings: SqpSettings, it: _Iterate | None = None, P=None):
    """Levenberg-Marquardt SQP search direction ``(dw, dy)`` (``dy`` is full length).

    The QP Hessian is ``J^T J + gamma * diag(0, D)`` with ``D`` the inverse
    squared reference element size at each node, expressed in the
    parametrized mesh coordinates as ``P^T D P``.  ``gamma`` is ``lm_gamma``
    relative to the Gauss-Newton curvature, ``max diag(Jred^T Jred) / max diag(D)``,
    so the regularization does not depend on the units of the residual.
    """
    P = mesh_parametrization(sp, settings) if P is None else P
    it = _Iterate(sp, w, y, P) if it is None else it
    if P.shape[1] == 0:
        return it.a.copy(), np.zeros(P.shape[0])
    D = np.repeat(mesh_scaling(sp.dg.mesh), sp.dg.mesh.dim)
    Dt = P.T @ (D[:, None] * P)
    R0 = it.ev["R"] + it.ev["R_w"] @ it.a
    H = it.Jred.T @ it.Jred
    g = it.Jred.T @ R0
    scale = float(np.max(np.diag(H)) / np.max(np.diag(Dt)))
    gamma = settings.lm_gamma * (scale if scale > 0 else 1.0)
    for _ in range(settings.max_boosts + 1):
        try:
            dth = -sla.cho_solve(sla.cho_factor(H + gamma * Dt), g)
            break
        except np.linalg.LinAlgError:
            gamma *= 10.0
    else:
        raise StepFailureError("reduced QP Hessian not positive definite after regularization boosts")
    return it.a + it.S @ dth, P @ dth


def energy_floor_fix(law, w, dg) -> np.ndarray:
    """Replace the energy (and nonpositive density) of offending elements by nodal averages."""
    if not isinstance(law, Euler):
        return np.asarray(w)
    ub = dg.as_blocks(np.array(w, dtype=float, copy=True))
    bad = np.any(ub[:, :, -1] < 0, axis=1)
    for comp, mask in ((-1, bad), (0, np.any(ub[:, :, 0] <= 0, axis=1))):
        if not np.any(mask):
            continue
        avg = ub[mask, :, comp].mean(axis=1)
        if np.any(avg <= 0):
            el = int(np.flatnonzero(mask)[np.argmin(avg)])
            raise InadmissibleStateError(
                f"element {el} has nonpositive average {'energy' if comp else 'density'}",
                "energy" if comp else "density", el,
            )
        ub[mask, :, comp] = avg[:, None]
    return ub.reshape(-1)


def solve_stage(sp, w0, y0, settings: SqpSettings | None = None, resmooth=None):
    """SQP iterations with unit steps until ``|c| < eps1`` and ``|r| < eps2``.

    ``resmooth(w_old, y_old, y_new)`` repairs an invalid mesh proposal; it is
    used at most once per stage before the stage is declared failed.
    """
    settings = SqpSettings() if settings is None else settings
    P = mesh_parametrization(sp, settings)
    law = sp.dg.law
    w = np.array(w0, dtype=float)
    y = np.array(y0, dtype=float)
    report = SqpReport(step=sp.n, stage=sp.i)
    repaired = False
    k = 0
    while True:
        try:
            it = _Iterate(sp, w, y, P)
        except (InadmissibleStateError, InvertedElementError, StepFailureError, LinearSolveError) as exc:
            raise StageFailureError(f"stage evaluation failed: {exc}", report) from exc
        report.record(it.rnorm, it.cnorm, it.obj)
        log.debug("step %s stage %s iter %d |r|=%.3e |c|=%.3e f=%.3e",
                  sp.n, sp.i, k, it.rnorm, it.cnorm, it.obj)
        if it.rnorm < settings.eps2 and it.cnorm < settings.eps1:
            report.converged = True
            break
        if k >= settings.max_iters:
            break
        try:
            dw, dy = sqp_step(sp, w, y, settings, it, P)
        except StepFailureError as exc:
            raise StageFailureError(str(exc), report) from exc
        w_new, y_new = w + dw, y + dy
        if not check_validity(sp.dg.mesh, y_new).valid:
            if repaired or resmooth is None:
                raise StageFailureError("SQP step produced an invalid mesh", report)
            repaired = True
            w_new, y_new = resmooth(w, y, y_new)
        try:
            w = energy_floor_fix(law, w_new, sp.dg)
        except InadmissibleStateError as exc:
            raise StageFailureError(f"energy floor fix failed: {exc}", report) from exc
        y = y_new
        k += 1
    report.iterations = k
    if not report.converged:
        raise StageFailureError(
            f"stage {sp.i} of step {sp.n} not converged after {k} iterations "
            f"(|r|={report.constraint_norm_history[-1]:.2e}, |c|={report.optimality_norm_history[-1]:.2e})",
            report,
        )
    return w, y, report


def default_resmooth(sp):
    """Repair hook: keep shock/boundary nodes of the proposal, smooth the rest, transfer state."""
    from .mesh import jacobian_ratio_at_nodes

    dg = sp.dg
    mesh = dg.mesh

    def repair(w, y, y_new):
        ys = smooth_mesh(mesh, y_new)
        if not check_validity(mesh, ys).valid:
            raise StageFailureError("re-smoothing could not repair the mesh")
        ratio = jacobian_ratio_at_nodes(mesh, ys, y, dg.trial.nodes)
        return (dg.as_blocks(w) * ratio[:, :, None]).reshape(-1), ys

    return repair
