"""Self-verification suites run by ``shocktrack verify``.

Each suite returns a list of :class:`Check` rows (name, measured value,
tolerance, pass flag).  The finite-difference and closed-form oracles used
here are independent of the code paths they check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dg import DGDiscretization, Dirichlet
from .dirk import StageProblem, integrate_ode, tableau
from .laws import Advection, Burgers, Euler, rankine_hugoniot_speed, smoothed_abs
from .mesh import (
    MovingMesh,
    check_validity,
    deformation_gradients,
    distortion_metric,
    interval_mesh,
    smooth_mesh,
)
from .optimizer import (
    SqpSettings,
    mesh_parametrization,
    multiplier_estimate,
    reduced_optimality,
    solve_stage,
)
from .problems import advec1d, burgers1d, shuosher
from .timeloop import initialize, shock_speeds, stage_initial_guess

SUITES = ("fluxes", "jacobians", "dirk", "optimizer", "mesh")


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def row(self) -> str:
        return f"{self.suite}\t{self.name}\t{self.value:.3e}\t{self.tol:.1e}\t{'PASS' if self.passed else 'FAIL'}"


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


# -- fluxes ------------------------------------------------------------------

def _random_states(law, rng, n):
    if isinstance(law, Euler):
        rho = rng.uniform(0.5, 2.0, n)
        v = rng.uniform(-1.5, 1.5, n)
        P = rng.uniform(0.5, 2.0, n)
        return law.to_conservative(rho, v, P)
    return rng.uniform(-2.0, 2.0, (n, 1))


def check_fluxes(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    laws = {
        "advection": Advection(lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x) ** 2),
        "burgers": Burgers(1.0),
        "euler": Euler(1.4),
    }
    n = 50
    for name, law in laws.items():
        x = rng.uniform(0.0, 1.0, n)
        v = rng.uniform(-1.0, 1.0, n)
        Ua, Ub = _random_states(law, rng, n), _random_states(law, rng, n)
        exact = law.normal_flux(Ua, 1.0, v, x)
        out.append(Check("fluxes", f"{name}: consistency H(U,U)=F(U).n", _rel(law.numerical_flux(Ua, Ua, 1.0, v, x), exact), 1e-13))
        h1 = law.numerical_flux(Ua, Ub, 1.0, v, x)
        h2 = law.numerical_flux(Ub, Ua, -1.0, v, x)
        out.append(Check("fluxes", f"{name}: conservation H(a,b,n)=-H(b,a,-n)", _rel(h1, -h2), 1e-13))
        # the smoothed flux is an analytic function: compare with complex step derivative of a 1D slice
        d = Ub - Ua
        hstep = 1e-30
        cs = np.imag(law.numerical_flux(Ua + 1j * hstep * d, Ub, 1.0, v, x)) / hstep
        fd = (law.numerical_flux(Ua + 1e-6 * d, Ub, 1.0, v, x) - law.numerical_flux(Ua - 1e-6 * d, Ub, 1.0, v, x)) / 2e-6
        out.append(Check("fluxes", f"{name}: flux is smooth (complex step vs FD)", _rel(cs, fd), 1e-6))
    xs = np.linspace(-1.0, 1.0, 201)
    sa = smoothed_abs(xs, 100.0)
    out.append(Check("fluxes", "smoothed |x| <= |x|", float(np.max(sa - np.abs(xs))), 0.0))
    out.append(Check("fluxes", "smoothed |x| error away from 0 (|x|>0.1)",
                     float(np.max(np.abs(sa - np.abs(xs))[np.abs(xs) > 0.1])), 1e-8))
    # Rankine-Hugoniot speeds on exact jumps
    b = Burgers(1.0)
    out.append(Check("fluxes", "burgers RH speed = (uL+uR)/2",
                     abs(rankine_hugoniot_speed(b, [2.0], [0.5], 1.0) - 1.25), 1e-14))
    e = Euler(1.4)
    M, g = 3.0, 1.4
    rho1, P1 = 1.0, 1.0
    c1 = np.sqrt(g * P1 / rho1)
    s = M * c1
    rho2 = rho1 * (g + 1) * M**2 / ((g - 1) * M**2 + 2)
    P2 = P1 * (2 * g * M**2 - (g - 1)) / (g + 1)
    v2 = s * (1 - rho1 / rho2)
    UL, UR = e.to_conservative(rho2, v2, P2), e.to_conservative(rho1, 0.0, P1)
    out.append(Check("fluxes", "euler RH speed of Mach 3 shock", abs(rankine_hugoniot_speed(e, UL, UR, 1.0) - s) / s, 1e-12))
    return out


# -- jacobians ---------------------------------------------------------------

def _small_problems():
    return {
        "advec1d": advec1d(n_elements=4, p=2),
        "burgers1d": burgers1d(n_elements=4, p=2),
        "shuosher": shuosher(n_elements=6, p=2),
    }


def _perturbed(setup, dg, u, x, rng):
    """Random valid state and mesh near the initial data."""
    mesh = dg.mesh
    verts = mesh.vertex_nodes()
    h = np.min(np.diff(x[verts]))
    y = x.copy()
    free = np.setdiff1d(verts, mesh.boundary_nodes())
    y[free] += rng.uniform(-0.2, 0.2, free.size) * h
    y = np.asarray(y)
    if mesh.q > 1:
        y = smooth_mesh(mesh, y, fixed=verts)
    ub = dg.as_blocks(u).copy()
    if isinstance(setup.law, Euler):
        ub *= 1.0 + 0.05 * rng.standard_normal(ub.shape[:-1] + (1,))
        ub[..., 1] += 0.05 * rng.standard_normal(ub.shape[:-1])
    else:
        ub += 0.05 * rng.standard_normal(ub.shape)
    w = ub.reshape(-1)
    return w, y


def jacobian_errors(setup, n_samples: int = 20, seed: int = 0) -> dict:
    """Max directional relative error of the four residual Jacobians vs central FD."""
    rng = np.random.default_rng(seed)
    dg, u, x = initialize(setup)
    tab = tableau(setup.scheme)
    errs = {k: 0.0 for k in ("dr/du", "dr/dx", "dR/du", "dR/dx", "stage dr/dw", "stage dr/dy")}
    for _ in range(n_samples):
        w, y = _perturbed(setup, dg, u, x, rng)
        xdot = rng.standard_normal(x.size) * 0.1
        du = rng.standard_normal(w.size) * np.maximum(np.abs(w), 1e-2)
        dx = np.zeros_like(y)
        inner = np.setdiff1d(np.arange(y.size), dg.mesh.boundary_nodes())
        dx[inner] = rng.standard_normal(inner.size)
        hx = 1e-6 * np.min(np.diff(np.sort(y)))
        for key, tag in (("p", "r"), ("e", "R")):
            J = dg.residual_jacobians(np.zeros_like(w), w, xdot, y, key)
            f = lambda ww, yy: dg.spatial_term(ww, yy, xdot, key)  # noqa: E731
            fd_u = (f(w + 1e-6 * du, y) - f(w - 1e-6 * du, y)) / 2e-6
            fd_x = (f(w, y + hx * dx) - f(w, y - hx * dx)) / (2 * hx)
            errs[f"d{tag}/du"] = max(errs[f"d{tag}/du"], _rel(J["du"] @ du, fd_u))
            errs[f"d{tag}/dx"] = max(errs[f"d{tag}/dx"], _rel(J["dx"] @ dx, fd_x))
        sp = StageProblem(dg, tab, 0, setup.dt, u, x)
        Js = sp.jacobians(w, y)
        fd_w = (sp.residual(w + 1e-6 * du, y) - sp.residual(w - 1e-6 * du, y)) / 2e-6
        fd_y = (sp.residual(w, y + hx * dx) - sp.residual(w, y - hx * dx)) / (2 * hx)
        errs["stage dr/dw"] = max(errs["stage dr/dw"], _rel(Js["dw"] @ du, fd_w))
        errs["stage dr/dy"] = max(errs["stage dr/dy"], _rel(Js["dy"] @ dx, fd_y))
    return errs


def check_jacobians(seed: int = 0, n_samples: int = 20) -> list[Check]:
    out = []
    for name, setup in _small_problems().items():
        for k, v in jacobian_errors(setup, n_samples, seed).items():
            out.append(Check("jacobians", f"{name}: {k}", v, 1e-6))
    return out


# -- dirk --------------------------------------------------------------------

def observed_ode_order(scheme: str, lam: complex = -1.0 + 2.0j, t_final: float = 1.0, steps=(16, 32)) -> float:
    tab = tableau(scheme)
    rhs = lambda t, y: np.array([lam * y[0]])  # noqa: E731
    drhs = lambda t, y: np.array([[lam]])  # noqa: E731
    exact = np.exp(lam * t_final)
    errs = []
    for n in steps:
        y = integrate_ode(tab, lambda t, y: rhs(t, y), drhs, np.array([1.0 + 0j]), t_final, n)
        errs.append(abs(y[0] - exact))
    return float(np.log2(errs[0] / errs[1]))


def _ode_order_real(scheme: str) -> float:
    """Order on the nonlinear scalar ODE ``y' = -y^2 + sin(t)`` against a fine RK4 solution."""
    from .reference import rk4

    f = lambda t, y: -y**2 + np.sin(t)  # noqa: E731
    df = lambda t, y: np.array([[-2.0 * y[0]]])  # noqa: E731
    ref = rk4(lambda t, y: f(t, y), np.array([1.0]), 0.0, 1.0, 20000)[0]
    tab = tableau(scheme)
    errs = [abs(integrate_ode(tab, f, df, np.array([1.0]), 1.0, n)[0] - ref) for n in (20, 40)]
    return float(np.log2(errs[0] / errs[1]))


def check_dirk() -> list[Check]:
    out = []
    closed = {
        "dirk1": lambda z: 1.0 / (1.0 - z),
    }
    for name in ("dirk1", "dirk2", "dirk3"):
        tab = tableau(name)
        out.append(Check("dirk", f"{name}: last row of A equals b", float(np.max(np.abs(tab.A[-1] - tab.b))), 1e-10))
        out.append(Check("dirk", f"{name}: row sums equal c", float(np.max(np.abs(tab.A.sum(1) - tab.c))), 1e-10))
        out.append(Check("dirk", f"{name}: weights sum to 1", abs(tab.b.sum() - 1.0), 1e-10))
        # R(z) must agree with one step of the method applied to y' = z y
        z = -0.7 + 0.3j
        one_step = integrate_ode(tab, lambda t, y: z * y, lambda t, y: np.array([[z]]), np.array([1.0 + 0j]), 1.0, 1)[0]
        out.append(Check("dirk", f"{name}: stability function matches one step", abs(tab.stability_function(z) - one_step), 1e-10))
        # exp(z) - R(z) = O(z^{order+1})
        zs = np.array([1e-2, 5e-3])
        e = [abs(np.exp(zz) - tab.stability_function(zz)) for zz in zs]
        out.append(Check("dirk", f"{name}: stability function order", abs(np.log2(e[0] / e[1]) - (tab.order + 1)), 0.1))
        out.append(Check("dirk", f"{name}: |R(-inf)| (L-stability)", abs(tab.stability_function(-1e8)), 1e-6))
        out.append(Check("dirk", f"{name}: linear ODE order", abs(observed_ode_order(name) - tab.order), 0.1))
        out.append(Check("dirk", f"{name}: nonlinear ODE order", abs(_ode_order_real(name) - tab.order), 0.1))
        if name in closed:
            out.append(Check("dirk", f"{name}: stability function closed form", abs(tab.stability_function(z) - closed[name](z)), 1e-14))
    return out


# -- optimizer ---------------------------------------------------------------

def check_optimizer() -> list[Check]:
    out = []
    setup = advec1d()
    dg, u, x = initialize(setup)
    tab = tableau(setup.scheme)
    sp = StageProblem(dg, tab, 0, setup.dt, u, x)
    w0, y0 = stage_initial_guess(dg, u, x, shock_speeds(dg, u, x), tab.c[0] * setup.dt)
    settings = setup.sqp
    w, y, rep = solve_stage(sp, w0, y0, settings)
    ev = sp.evaluate(w, y)
    P = mesh_parametrization(sp, settings)
    c = P.T @ reduced_optimality(sp, w, y)
    out.append(Check("optimizer", "stage converged", 0.0 if rep.converged else 1.0, 0.0))
    out.append(Check("optimizer", "re-evaluated |r| / eps2", float(np.linalg.norm(ev["r"])) / settings.eps2, 1.0))
    out.append(Check("optimizer", "re-evaluated |c| / eps1", float(np.linalg.norm(c)) / settings.eps1, 1.0))
    lam = multiplier_estimate(sp, w0, y0)
    ev0 = sp.evaluate(w0, y0)
    rhs = ev0["R_w"].T @ ev0["R"]
    out.append(Check("optimizer", "multiplier defining equation", _rel(ev0["r_w"].T @ lam, rhs), 1e-10))
    out.append(Check("optimizer", "iterations <= 15", float(rep.iterations), 15.0))
    return out


# -- mesh --------------------------------------------------------------------

def triangle_patch() -> MovingMesh:
    """Unit square split into four triangles around a center node (node 4)."""
    X = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    conn = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    markers = {i: "wall" for i in range(4)}
    return MovingMesh(2, 1, X.reshape(-1), conn, markers)


def displaced_patch_coords(mesh: MovingMesh, offset=(1.25, 0.6)) -> np.ndarray:
    x = mesh.ref_coords.copy().reshape(-1, 2)
    x[4] = offset
    return x.reshape(-1)


def check_mesh(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    mesh = triangle_patch()
    el = mesh.element
    pts, wts = el.quad_points, el.quad_weights
    x = mesh.ref_coords.reshape(-1, 2) + 0.05 * rng.standard_normal((5, 2))
    G, det_ref = deformation_gradients(mesh, x.reshape(-1), pts)
    base = distortion_metric(G, wts[None, :] * np.abs(det_ref))
    worst = 0.0
    for _ in range(5):
        th = rng.uniform(0, 2 * np.pi)
        Rm = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        xr = x @ Rm.T + rng.uniform(-3, 3, 2)
        Gr, _ = deformation_gradients(mesh, xr.reshape(-1), pts)
        worst = max(worst, abs(distortion_metric(Gr, wts[None, :] * np.abs(det_ref)) - base) / base)
    out.append(Check("mesh", "distortion metric rigid-motion invariance", worst, 1e-12))
    scaled = x * 2.5
    Gs, _ = deformation_gradients(mesh, scaled.reshape(-1), pts)
    out.append(Check("mesh", "distortion metric scale invariance",
                     abs(distortion_metric(Gs, wts[None, :] * np.abs(det_ref)) - base) / base, 1e-12))
    tangled = displaced_patch_coords(mesh)
    before = check_validity(mesh, tangled)
    out.append(Check("mesh", "displaced patch starts tangled", 0.0 if not before.valid else 1.0, 0.0))
    fixed = smooth_mesh(mesh, tangled)
    after = check_validity(mesh, fixed)
    out.append(Check("mesh", "regularized smoothing untangles the patch", 0.0 if after.valid else 1.0, 0.0))
    # free-stream preservation under a smooth manufactured motion
    out.append(Check("mesh", "free-stream residual under smooth motion", free_stream_residual(), 1e-10))
    return out


def free_stream_residual(p: int = 3, n_elements: int = 8) -> float:
    """Max |semi-discrete residual| for a constant physical Euler state on a moving mesh."""
    law = Euler(1.4)
    mesh = interval_mesh([(0.0, 1.0, n_elements)], q=1)
    U = law.to_conservative(1.3, 0.4, 2.0)
    dg = DGDiscretization(law, mesh, p, (Dirichlet(U), Dirichlet(U)))
    X = mesh.ref_coords
    t = 0.3
    x = X + 0.05 * np.sin(2 * np.pi * X) * np.sin(t)
    xdot = 0.05 * np.sin(2 * np.pi * X) * np.cos(t)
    g = dg.jacobian_at_solution_nodes(x)  # (E, nb)
    u = (g[..., None] * U).reshape(-1)
    # d(g U)/dt at the solution nodes
    gdot = _nodal_gdot(dg, xdot)
    udot = (gdot[..., None] * U).reshape(-1)
    return float(np.max(np.abs(dg.semidiscrete_residual(udot, u, xdot, x))))


def _nodal_gdot(dg, xdot):
    return dg.jacobian_at_solution_nodes(np.asarray(dg.mesh.ref_coords) + xdot) - 1.0


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "fluxes":
        return check_fluxes(seed)
    if name == "jacobians":
        return check_jacobians(seed)
    if name == "dirk":
        return check_dirk()
    if name == "optimizer":
        return check_optimizer()
    if name == "mesh":
        return check_mesh(seed)
    raise KeyError(name)
