"""Nodal DG discretization of the ALE-transformed conservation law (1D).

The residual of element ``K`` tested against ``psi`` is

    int_K psi . dU_X/dt dX  +  int_dK psi^+ . H_X dS  -  int_K F_X : grad_X psi dX

where integrals are over the reference (t = 0) mesh.  In one dimension the
transformed flux reduces to the modified flux of the physical state
``U = U_X / g`` and the face normal scaling is one, which the kernels below
exploit.

Derivatives of the pointwise flux kernels are taken by complex-step
differentiation (exact to rounding since every kernel is analytic), then
chained through the nodal bases to the coefficient, coordinate and
velocity Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elements import build_reference_element, gauss_legendre
from .errors import InvertedElementError
from .laws import ConservationLaw, Euler
from .mesh import MovingMesh

CSTEP = 1e-30


class Periodic:
    pass


@dataclass
class Dirichlet:
    """Exterior trace fixed to a physical state."""

    state: np.ndarray

    def exterior(self, law, U):
        return np.broadcast_to(np.asarray(self.state, dtype=float), np.shape(U)) + 0 * U


@dataclass
class PrescribedVelocity:
    """Euler only: exterior trace equals the interior one with the velocity replaced."""

    velocity: float

    def exterior(self, law: Euler, U):
        rho = U[..., 0]
        P = law.pressure(U)
        v = self.velocity
        E = P / (law.gamma - 1.0) + 0.5 * rho * v * v
        return np.stack([rho, rho * v, E], axis=-1)


@dataclass
class Extrapolate:
    """Exterior trace equals the interior trace."""

    def exterior(self, law, U):
        return U


class DGDiscretization:
    """Residuals ``r`` (test degree p) and ``R`` (test degree p+1) and their Jacobians.

    ``bc`` is ``"periodic"`` or a pair ``(left, right)`` of boundary objects.
    Coefficients are ordered element-major, node-major, component-major.
    """

    def __init__(self, law: ConservationLaw, mesh: MovingMesh, p: int, bc=None, p_enriched=None):
        if mesh.dim != 1:
            raise NotImplementedError("DG assembly is implemented for d = 1")
        self.law = law
        self.mesh = mesh
        self.p = p
        self.pe = p + 1 if p_enriched is None else p_enriched
        self.m = law.m
        if bc is None or bc == "periodic" or isinstance(bc, Periodic):
            self.periodic = True
            self.bc = None
        else:
            self.periodic = False
            self.bc = tuple(bc)

        self.trial = build_reference_element(p, 1)
        nq = max(p, self.pe) + 3
        xq, wq = gauss_legendre(nq)
        self.xq, self.wq = xq, wq
        ends = np.array([-1.0, 1.0])
        self.Phi = self.trial.basis(xq)
        self.Phi_f = self.trial.basis(ends)
        self.tests = {}
        for key, deg in (("p", p), ("e", self.pe)):
            el = build_reference_element(deg, 1)
            self.tests[key] = dict(
                el=el, Psi=el.basis(xq), dPsi=el.grad(xq)[..., 0], Psi_f=el.basis(ends)
            )
        mel = mesh.element
        self.chi = mel.basis(xq)
        self.dchi = mel.grad(xq)[..., 0]
        self.chi_f = mel.basis(ends)
        self.dchi_f = mel.grad(ends)[..., 0]

        E = mesh.n_elements
        self.E = E
        self.nb = self.trial.nb
        self.conn = mesh.connectivity
        X = mesh.ref_coords
        self.J0 = X[self.conn] @ self.dchi.T  # (E, nq)
        self.J0_f = X[self.conn] @ self.dchi_f.T  # (E, 2)
        if np.any(self.J0 <= 0):
            raise InvertedElementError("reference mesh is inverted")

        nodes_left = self.conn[:, 0]
        if self.periodic:
            self.f_left = (np.arange(E) - 1) % E
            self.f_right = np.arange(E)
            self.f_node = nodes_left
        else:
            self.f_left = np.arange(E - 1)
            self.f_right = np.arange(1, E)
            self.f_node = nodes_left[1:]
        self.n_u = E * self.nb * self.m
        self.n_x = mesh.n_nodes
        self._mass = {}
        self._patterns = {}

    # -- sizes and layout --------------------------------------------------

    def n_test(self, key="p") -> int:
        return self.E * self.tests[key]["el"].nb * self.m

    def as_blocks(self, u) -> np.ndarray:
        return np.asarray(u).reshape(self.E, self.nb, self.m)

    def solution_nodes(self, x) -> np.ndarray:
        """Physical positions of the solution nodes, ``(E, nb)``."""
        chi = self.mesh.element.basis(self.trial.nodes[:, 0])
        return np.asarray(x)[self.conn] @ chi.T

    def jacobian_at_solution_nodes(self, x) -> np.ndarray:
        dchi = self.mesh.element.grad(self.trial.nodes[:, 0])[..., 0]
        X = self.mesh.ref_coords
        return (np.asarray(x)[self.conn] @ dchi.T) / (X[self.conn] @ dchi.T)

    # -- mass matrices -----------------------------------------------------

    def mass_matrix(self, key="p") -> sp.csr_matrix:
        if key not in self._mass:
            t = self.tests[key]
            blocks = np.einsum("q,eq,qi,qj->eij", self.wq, self.J0, t["Psi"], self.Phi)
            eye = np.eye(self.m)
            full = np.einsum("eij,cd->eicjd", blocks, eye)
            nt = t["el"].nb
            self._mass[key] = sp.block_diag(
                [full[e].reshape(nt * self.m, self.nb * self.m) for e in range(self.E)], format="csr"
            )
        return self._mass[key]

    # -- pointwise kernels -------------------------------------------------

    def _geometry(self, x, nu):
        x = np.asarray(x, dtype=float)
        nu = np.asarray(nu, dtype=float)
        xe, ve = x[self.conn], nu[self.conn]
        J = xe @ self.dchi.T
        J_f = xe @ self.dchi_f.T
        if np.any(J <= 0) or np.any(J_f <= 0):
            bad = int(np.argmin(np.minimum(J.min(1), J_f.min(1))))
            raise InvertedElementError(f"element {bad} is inverted", bad)
        return dict(
            g=J / self.J0, g_f=J_f / self.J0_f, xp=xe @ self.chi.T, v=ve @ self.chi.T,
        )

    def _vol_kernel(self, UX, g, v, xp):
        U = UX / g[..., None]
        return self.law.normal_flux(U, 1.0, v[..., None], xp[..., None])

    def _face_kernel(self, UL, UR, gL, gR, v, xf):
        return self.law.numerical_flux(
            UL / gL[..., None], UR / gR[..., None], 1.0, v[..., None], xf[..., None]
        )

    def _bnd_kernel(self, side, UX, g, v, xb):
        U = UX / g[..., None]
        ext = self.bc[side].exterior(self.law, U)
        n = -1.0 if side == 0 else 1.0
        return self.law.numerical_flux(U, ext, n, v[..., None], xb[..., None])

    def _depends_on_x(self) -> bool:
        return callable(getattr(self.law, "beta", None))

    def _cstep(self, fn, args, jac):
        """Value of ``fn(*args)`` and derivatives w.r.t. every argument.

        Array arguments of shape ``(..., m)`` get an ``(..., m_out, m)``
        derivative; scalar-per-point arguments get ``(..., m_out)``.
        """
        val = fn(*args)
        if not jac:
            return np.real(val), None
        ders = []
        for k, a in enumerate(args):
            if a is None:
                ders.append(None)
                continue
            if k in self._vec_args:
                cols = []
                for j in range(a.shape[-1]):
                    ac = a.astype(complex)
                    ac[..., j] += 1j * CSTEP
                    cargs = list(args)
                    cargs[k] = ac
                    cols.append(np.imag(fn(*cargs)) / CSTEP)
                ders.append(np.stack(cols, axis=-1))
            else:
                cargs = list(args)
                cargs[k] = a + 1j * CSTEP
                ders.append(np.imag(fn(*cargs)) / CSTEP)
        return np.real(val), ders

    def kernels(self, u, x, nu, jac=True) -> dict:
        """Flux values at quadrature points and faces plus their partial derivatives."""
        geo = self._geometry(x, nu)
        ub = self.as_blocks(u)
        xarr = np.asarray(x, dtype=float)
        nuarr = np.asarray(nu, dtype=float)
        UX = np.einsum("qj,ejc->eqc", self.Phi, ub)
        UXf = np.einsum("sj,ejc->esc", self.Phi_f, ub)  # s=0 left end, s=1 right end
        dx = self._depends_on_x()
        out = {"geo": geo}

        self._vec_args = {0}
        args = (UX, geo["g"], geo["v"], geo["xp"] if dx else None)
        if not dx:
            fn = lambda a, b, c, _=None: self._vol_kernel(a, b, c, geo["xp"])
        else:
            fn = self._vol_kernel
        self.law.check_admissible(UX / geo["g"][..., None])
        out["vol"] = self._cstep(fn, args, jac)

        fl, fr, fn_ = self.f_left, self.f_right, self.f_node
        self._vec_args = {0, 1}
        fargs = (
            UXf[fl, 1], UXf[fr, 0], geo["g_f"][fl, 1], geo["g_f"][fr, 0], nuarr[fn_],
            xarr[fn_] if dx else None,
        )
        xf = xarr[fn_]
        ffn = self._face_kernel if dx else (lambda a, b, c, d_, e, _=None: self._face_kernel(a, b, c, d_, e, xf))
        out["face"] = self._cstep(ffn, fargs, jac)

        if not self.periodic:
            bnd = []
            self._vec_args = {0}
            for side, (e, s, node) in enumerate([(0, 0, self.conn[0, 0]), (self.E - 1, 1, self.conn[-1, -1])]):
                xb = xarr[[node]]
                bargs = (UXf[[e], s], geo["g_f"][[e], s], nuarr[[node]], xb if dx else None)
                bfn = (lambda a, b, c, d_=None, side=side, xb=xb: self._bnd_kernel(side, a, b, c, xb if d_ is None else d_))
                bnd.append(self._cstep(bfn, bargs, jac))
            out["bnd"] = bnd
        return out

    # -- assembly ----------------------------------------------------------

    def spatial_term(self, u, x, nu, key="p", kern=None) -> np.ndarray:
        """Algebraic form ``f(u, x, nu)`` of the face and volume terms."""
        k = self.kernels(u, x, nu, jac=False) if kern is None else kern
        t = self.tests[key]
        nt = t["el"].nb
        Kv = k["vol"][0]
        res = -np.einsum("q,qi,eqc->eic", self.wq, t["dPsi"], Kv)
        H = k["face"][0]
        PsiL, PsiR = t["Psi_f"][0], t["Psi_f"][1]
        np.add.at(res, self.f_left, PsiR[None, :, None] * H[:, None, :])
        np.add.at(res, self.f_right, -PsiL[None, :, None] * H[:, None, :])
        if not self.periodic:
            HL = k["bnd"][0][0]
            HR = k["bnd"][1][0]
            res[0] += PsiL[:, None] * HL[0][None, :]
            res[-1] += PsiR[:, None] * HR[0][None, :]
        return res.reshape(self.E * nt * self.m)

    def semidiscrete_residual(self, udot, u, xdot, x) -> np.ndarray:
        return self.mass_matrix("p") @ udot + self.spatial_term(u, x, xdot, "p")

    def enriched_residual(self, udot, u, xdot, x) -> np.ndarray:
        return self.mass_matrix("e") @ udot + self.spatial_term(u, x, xdot, "e")

    def _pattern(self, key):
        """COO row/col index arrays for each Jacobian contribution (fixed sparsity)."""
        if key in self._patterns:
            return self._patterns[key]
        nt = self.tests[key]["el"].nb
        m, nb, E = self.m, self.nb, self.E
        i = np.arange(nt)[:, None, None, None]
        c = np.arange(m)[None, :, None, None]
        j = np.arange(nb)[None, None, :, None]
        d = np.arange(m)[None, None, None, :]

        def uu(re, ue):
            re = np.asarray(re)[:, None, None, None, None]
            ue = np.asarray(ue)[:, None, None, None, None]
            rows = (re * nt + i) * m + c + 0 * j + 0 * d
            cols = (ue * nb + j) * m + d + 0 * i + 0 * c
            return rows.ravel(), cols.ravel()

        def ux(re, nodes):
            re = np.asarray(re)[:, None, None, None]
            nodes = np.asarray(nodes)
            nodes = nodes.reshape(len(nodes), 1, 1, -1)
            ii = np.arange(nt)[None, :, None, None]
            cc = np.arange(m)[None, None, :, None]
            rows = (re * nt + ii) * m + cc + 0 * nodes
            cols = nodes + 0 * rows
            return rows.ravel(), cols.ravel()

        el = np.arange(E)
        fl, fr = self.f_left, self.f_right
        pat = dict(
            vol_u=uu(el, el),
            face_u=[uu(fl, fl), uu(fl, fr), uu(fr, fl), uu(fr, fr)],
            vol_x=ux(el, self.conn),
            face_x=[ux(fl, self.conn[fl]), ux(fl, self.conn[fr]), ux(fl, self.f_node[:, None]),
                    ux(fr, self.conn[fl]), ux(fr, self.conn[fr]), ux(fr, self.f_node[:, None])],
        )
        if not self.periodic:
            pat["bnd_u"] = [uu([0], [0]), uu([E - 1], [E - 1])]
            pat["bnd_x"] = [
                (ux([0], self.conn[[0]]), ux([0], [[self.conn[0, 0]]])),
                (ux([E - 1], self.conn[[E - 1]]), ux([E - 1], [[self.conn[-1, -1]]])),
            ]
        self._patterns[key] = pat
        return pat

    def jacobians(self, u, x, nu, key="p", kern=None) -> dict:
        """Sparse ``df/du``, ``df/dx`` (explicit), ``df/dnu`` of the spatial term."""
        k = self.kernels(u, x, nu, jac=True) if kern is None else kern
        t = self.tests[key]
        nt = t["el"].nb
        pat = self._pattern(key)
        n_r = self.E * nt * self.m
        geo = k["geo"]
        wq, dPsi, Phi = self.wq, t["dPsi"], self.Phi
        PsiL, PsiR = t["Psi_f"]
        PhiL, PhiR = self.Phi_f
        dchiL, dchiR = self.dchi_f
        chiL, chiR = self.chi_f

        rows_u, cols_u, vals_u = [], [], []
        rows_x, cols_x, vals_x = [], [], []
        rows_n, cols_n, vals_n = [], [], []

        # volume
        _, (dU, dg, dv, dxp) = k["vol"]
        B = -np.einsum("q,qi,eqcd,qj->eicjd", wq, dPsi, dU, Phi)
        rows_u.append(pat["vol_u"][0]); cols_u.append(pat["vol_u"][1]); vals_u.append(B.ravel())
        gx = np.einsum("q,qi,eqc,qa,eq->eica", wq, dPsi, dg, self.dchi, 1.0 / self.J0)
        if dxp is not None:
            gx = gx + np.einsum("q,qi,eqc,qa->eica", wq, dPsi, dxp, self.chi)
        rows_x.append(pat["vol_x"][0]); cols_x.append(pat["vol_x"][1]); vals_x.append(-gx.ravel())
        gn = np.einsum("q,qi,eqc,qa->eica", wq, dPsi, dv, self.chi)
        rows_n.append(pat["vol_x"][0]); cols_n.append(pat["vol_x"][1]); vals_n.append(-gn.ravel())

        # interior faces: H(UL, UR, gL, gR, v, x)
        _, (dHL, dHR, dgL, dgR, dvf, dxf) = k["face"]
        fl, fr = self.f_left, self.f_right
        for sgn, Psi_s, (p_ll, p_lr), px in (
            (1.0, PsiR, (pat["face_u"][0], pat["face_u"][1]), pat["face_x"][:3]),
            (-1.0, PsiL, (pat["face_u"][2], pat["face_u"][3]), pat["face_x"][3:]),
        ):
            BL = sgn * np.einsum("i,fcd,j->ficjd", Psi_s, dHL, PhiR)
            BR = sgn * np.einsum("i,fcd,j->ficjd", Psi_s, dHR, PhiL)
            for pp, BB in ((p_ll, BL), (p_lr, BR)):
                rows_u.append(pp[0]); cols_u.append(pp[1]); vals_u.append(BB.ravel())
            XL = sgn * np.einsum("i,fc,a,f->fica", Psi_s, dgL, dchiR, 1.0 / self.J0_f[fl, 1])
            XR = sgn * np.einsum("i,fc,a,f->fica", Psi_s, dgR, dchiL, 1.0 / self.J0_f[fr, 0])
            rows_x += [px[0][0], px[1][0]]; cols_x += [px[0][1], px[1][1]]
            vals_x += [XL.ravel(), XR.ravel()]
            if dxf is not None:
                XF = sgn * np.einsum("i,fc->fic", Psi_s, dxf)[..., None]
                rows_x.append(px[2][0]); cols_x.append(px[2][1]); vals_x.append(XF.ravel())
            NF = sgn * np.einsum("i,fc->fic", Psi_s, dvf)[..., None]
            rows_n.append(px[2][0]); cols_n.append(px[2][1]); vals_n.append(NF.ravel())

        if not self.periodic:
            for side in (0, 1):
                _, (dUb, dgb, dvb, dxb) = k["bnd"][side]
                Psi_s = PsiL if side == 0 else PsiR
                Phi_s = PhiL if side == 0 else PhiR
                dchi_s = dchiL if side == 0 else dchiR
                e = 0 if side == 0 else self.E - 1
                J0s = self.J0_f[e, 0 if side == 0 else 1]
                B = np.einsum("i,fcd,j->ficjd", Psi_s, dUb, Phi_s)
                pp = pat["bnd_u"][side]
                rows_u.append(pp[0]); cols_u.append(pp[1]); vals_u.append(B.ravel())
                pel, pnode = pat["bnd_x"][side]
                XG = np.einsum("i,fc,a->fica", Psi_s, dgb, dchi_s) / J0s
                rows_x.append(pel[0]); cols_x.append(pel[1]); vals_x.append(XG.ravel())
                if dxb is not None:
                    XF = np.einsum("i,fc->fic", Psi_s, dxb)[..., None]
                    rows_x.append(pnode[0]); cols_x.append(pnode[1]); vals_x.append(XF.ravel())
                NF = np.einsum("i,fc->fic", Psi_s, dvb)[..., None]
                rows_n.append(pnode[0]); cols_n.append(pnode[1]); vals_n.append(NF.ravel())

        def build(rows, cols, vals, ncol):
            return sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(n_r, ncol),
            )

        return {
            "du": build(rows_u, cols_u, vals_u, self.n_u),
            "dx": build(rows_x, cols_x, vals_x, self.n_x),
            "dnu": build(rows_n, cols_n, vals_n, self.n_x),
        }

    def residual_jacobians(self, udot, u, xdot, x, key="p") -> dict:
        """Jacobians of ``m u' + f(u, x, x')`` w.r.t. ``u'``, ``u``, ``x'`` and ``x``."""
        jac = self.jacobians(u, x, xdot, key)
        return {"dudot": self.mass_matrix(key), "du": jac["du"], "dxdot": jac["dnu"], "dx": jac["dx"]}

    # -- post-processing ---------------------------------------------------

    def physical_values(self, u, x, points) -> tuple[np.ndarray, np.ndarray]:
        """Physical positions and physical states ``U_X/g`` at reference points."""
        pts = np.asarray(points, dtype=float).reshape(-1)
        mel = self.mesh.element
        chi, dchi = mel.basis(pts), mel.grad(pts)[..., 0]
        xe = np.asarray(x)[self.conn]
        Xe = self.mesh.ref_coords[self.conn]
        g = (xe @ dchi.T) / (Xe @ dchi.T)
        UX = np.einsum("qj,ejc->eqc", self.trial.basis(pts), self.as_blocks(u))
        return xe @ chi.T, UX / g[..., None]

    def total_mass(self, u) -> np.ndarray:
        """Integral of the physical state over the physical domain, per component."""
        ub = self.as_blocks(u)
        UX = np.einsum("qj,ejc->eqc", self.Phi, ub)
        return np.einsum("q,eq,eqc->c", self.wq, self.J0, UX)
