"""Conservation laws, their fluxes and smoothed numerical fluxes.

Array conventions: states have shape ``(..., m)``, positions, normals and
velocities ``(..., d)``, physical fluxes ``(..., m, d)``.  Every flux routine
is written so that complex inputs propagate (complex-step differentiation of
the DG kernels relies on it); admissibility checks look at the real part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateJumpError, InadmissibleStateError

DEFAULT_SMOOTHING = 100.0


def smoothed_abs(x, k: float = DEFAULT_SMOOTHING):
    """Smooth, even under-approximation ``x*tanh(k*x)`` of ``|x|``."""
    if k <= 0:
        raise ValueError("smoothing parameter must be positive")
    return x * np.tanh(k * x)


def _as_vec(a, d: int):
    a = np.asarray(a)
    if a.ndim == 0:
        a = a[None]
    if a.shape[-1] != d:
        a = a[..., None]
    return a


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class ConservationLaw:
    """Base class; subclasses implement :meth:`flux` and :meth:`numerical_flux`."""

    m: int
    dim: int
    k: float = DEFAULT_SMOOTHING
    name: str = "law"

    def check_admissible(self, U) -> None:
        pass

    def flux(self, U, x=None):
        raise NotImplementedError

    def flux_jacobian(self, U, x=None):
        raise NotImplementedError

    def modified_flux(self, U, v, x=None):
        U = np.asarray(U)
        v = _as_vec(v, self.dim)
        return self.flux(U, x) - U[..., :, None] * v[..., None, :]

    def numerical_flux(self, Up, Um, n, v=0.0, x=None):
        raise NotImplementedError

    def normal_flux(self, U, n, v=0.0, x=None):
        """Modified flux contracted with the normal, ``(F(U) - U v^T) n``."""
        n = _as_vec(n, self.dim)
        return np.einsum("...ij,...j->...i", self.modified_flux(U, v, x), n)


@dataclass
class Advection(ConservationLaw):
    """Linear advection ``U_t + div(U beta(x)) = 0``.

    ``beta`` is either a constant (scalar or d-vector) or a callable of the
    physical position returning ``(..., d)``.
    """

    beta: float | np.ndarray | Callable = 1.0
    dim: int = 1
    k: float = DEFAULT_SMOOTHING
    m: int = 1
    name: str = "advection"

    def velocity(self, x):
        if callable(self.beta):
            if x is None:
                raise ValueError("spatially varying advection needs positions")
            return _as_vec(self.beta(np.asarray(x)), self.dim)
        b = np.asarray(self.beta, dtype=float).reshape(-1)
        if b.size != self.dim:
            b = np.full(self.dim, b[0])
        if x is None:
            return b
        return np.broadcast_to(b, np.shape(_as_vec(x, self.dim)))

    def flux(self, U, x=None):
        U = np.asarray(U)
        return U[..., :, None] * self.velocity(x)[..., None, :]

    def flux_jacobian(self, U, x=None):
        U = np.asarray(U)
        b = self.velocity(x)
        out = np.zeros(U.shape + (1, self.dim), dtype=np.result_type(U, b))
        out[..., 0, 0, :] = b
        return out

    def numerical_flux(self, Up, Um, n, v=0.0, x=None):
        Up, Um = np.asarray(Up), np.asarray(Um)
        n = _as_vec(n, self.dim)
        a = _dot(self.velocity(x) - _as_vec(v, self.dim), n)[..., None]
        return 0.5 * (a * (Up + Um) + (Up - Um) * smoothed_abs(a, self.k))


@dataclass
class Burgers(ConservationLaw):
    """Inviscid Burgers ``U_t + div(U^2/2 beta) = 0`` with constant ``beta``."""

    beta: float | np.ndarray = 1.0
    dim: int = 1
    k: float = DEFAULT_SMOOTHING
    m: int = 1
    name: str = "burgers"

    def _beta(self):
        b = np.asarray(self.beta, dtype=float).reshape(-1)
        return b if b.size == self.dim else np.full(self.dim, b[0])

    def flux(self, U, x=None):
        U = np.asarray(U)
        return 0.5 * U[..., :, None] ** 2 * self._beta()

    def flux_jacobian(self, U, x=None):
        U = np.asarray(U)
        return U[..., :, None, None] * self._beta()

    def numerical_flux(self, Up, Um, n, v=0.0, x=None):
        # scalar Roe (Murman) flux with smoothed |a|
        Up, Um = np.asarray(Up), np.asarray(Um)
        n = _as_vec(n, self.dim)
        v = _as_vec(v, self.dim)
        bn = _dot(self._beta() * np.ones_like(n), n)[..., None]
        vn = _dot(v, n)[..., None]
        fp = (0.5 * Up**2 * bn) - Up * vn
        fm = (0.5 * Um**2 * bn) - Um * vn
        a = 0.5 * (Up + Um) * bn - vn
        return 0.5 * (fp + fm + (Up - Um) * smoothed_abs(a, self.k))


@dataclass(frozen=True)
class PrimitiveState:
    rho: np.ndarray
    v: np.ndarray
    P: np.ndarray


@dataclass
class Euler(ConservationLaw):
    """Compressible Euler equations for a calorically ideal gas.

    Conservative variables are ``(rho, rho*v_1..rho*v_d, rho*E)``.  The
    numerical flux is Roe's flux with every eigenvalue shifted by ``-v.n``
    for the mesh motion and its absolute value smoothed.
    """

    gamma: float = 1.4
    dim: int = 1
    k: float = DEFAULT_SMOOTHING
    name: str = "euler"

    @property
    def m(self) -> int:
        return self.dim + 2

    def to_conservative(self, rho, v, P):
        rho = np.asarray(rho)
        v = _as_vec(v, self.dim) * np.ones(np.shape(rho) + (1,))
        P = np.asarray(P)
        E = P / (self.gamma - 1.0) + 0.5 * rho * _dot(v, v)
        return np.concatenate([rho[..., None], rho[..., None] * v, E[..., None]], axis=-1)

    def to_primitive(self, U) -> PrimitiveState:
        U = np.asarray(U)
        rho = U[..., 0]
        v = U[..., 1:-1] / rho[..., None]
        P = (self.gamma - 1.0) * (U[..., -1] - 0.5 * rho * _dot(v, v))
        return PrimitiveState(rho, v, P)

    def pressure(self, U):
        U = np.asarray(U)
        rho = U[..., 0]
        mom = U[..., 1:-1]
        return (self.gamma - 1.0) * (U[..., -1] - 0.5 * _dot(mom, mom) / rho)

    def check_admissible(self, U) -> None:
        U = np.asarray(U)
        rho = np.real(U[..., 0])
        if not np.all(rho > 0):
            idx = np.argwhere(~(rho > 0))[0]
            raise InadmissibleStateError(
                f"nonpositive density {rho[tuple(idx)]:.6g}", "density", tuple(idx)
            )
        P = np.real(self.pressure(U))
        if not np.all(P > 0):
            idx = np.argwhere(~(P > 0))[0]
            raise InadmissibleStateError(
                f"nonpositive pressure {P[tuple(idx)]:.6g}", "pressure", tuple(idx)
            )

    def flux(self, U, x=None):
        U = np.asarray(U)
        self.check_admissible(U)
        rho = U[..., 0]
        v = U[..., 1:-1] / rho[..., None]
        P = self.pressure(U)
        d = self.dim
        F = np.empty(U.shape + (d,), dtype=U.dtype if np.iscomplexobj(U) else float)
        F[..., 0, :] = U[..., 1:-1]
        F[..., 1:-1, :] = U[..., 1:-1, None] * v[..., None, :] + P[..., None, None] * np.eye(d)
        F[..., -1, :] = (U[..., -1] + P)[..., None] * v
        return F

    def flux_jacobian(self, U, x=None):
        U = np.asarray(U)
        g = self.gamma
        d = self.dim
        m = d + 2
        rho = U[..., 0]
        u = U[..., 1:-1] / rho[..., None]
        q2 = _dot(u, u)
        P = self.pressure(U)
        H = (U[..., -1] + P) / rho
        A = np.zeros(U.shape[:-1] + (m, m, d), dtype=np.result_type(U, float))
        for kdir in range(d):
            uk = u[..., kdir]
            A[..., 0, 1 + kdir, kdir] = 1.0
            for i in range(d):
                ui = u[..., i]
                A[..., 1 + i, 0, kdir] = -ui * uk + (i == kdir) * (g - 1.0) * 0.5 * q2
                for j in range(d):
                    A[..., 1 + i, 1 + j, kdir] = (
                        (i == j) * uk + ui * (j == kdir) - (i == kdir) * (g - 1.0) * u[..., j]
                    )
                A[..., 1 + i, m - 1, kdir] = (i == kdir) * (g - 1.0)
            A[..., m - 1, 0, kdir] = uk * ((g - 1.0) * 0.5 * q2 - H)
            for j in range(d):
                A[..., m - 1, 1 + j, kdir] = H * (j == kdir) - (g - 1.0) * u[..., j] * uk
            A[..., m - 1, m - 1, kdir] = g * uk
        return A

    def sound_speed(self, U):
        U = np.asarray(U)
        return np.sqrt(self.gamma * self.pressure(U) / U[..., 0])

    def numerical_flux(self, Up, Um, n, v=0.0, x=None):
        Up, Um = np.asarray(Up), np.asarray(Um)
        n = _as_vec(n, self.dim)
        v = _as_vec(v, self.dim)
        g = self.gamma
        fp = self.normal_flux(Up, n, v)
        fm = self.normal_flux(Um, n, v)

        rl, rr = Up[..., 0], Um[..., 0]
        ul = Up[..., 1:-1] / rl[..., None]
        ur = Um[..., 1:-1] / rr[..., None]
        pl, pr = self.pressure(Up), self.pressure(Um)
        hl = (Up[..., -1] + pl) / rl
        hr = (Um[..., -1] + pr) / rr

        sl, sr = np.sqrt(rl), np.sqrt(rr)
        rho = sl * sr
        wl = (sl / (sl + sr))[..., None]
        u = wl * ul + (1.0 - wl) * ur
        H = wl[..., 0] * hl + (1.0 - wl[..., 0]) * hr
        q2 = _dot(u, u)
        c2 = (g - 1.0) * (H - 0.5 * q2)
        if not np.all(np.real(c2) > 0):
            idx = np.argwhere(~(np.real(c2) > 0))[0]
            raise InadmissibleStateError(
                "Roe-averaged sound speed is not real", "enthalpy", tuple(idx)
            )
        c = np.sqrt(c2)
        qn = _dot(u, n)
        vn = _dot(v, n)

        # jumps, exterior minus interior
        drho = rr - rl
        dp = pr - pl
        du = ur - ul
        dqn = _dot(du, n)

        lam1 = smoothed_abs(qn - c - vn, self.k)
        lam2 = smoothed_abs(qn - vn, self.k)
        lam3 = smoothed_abs(qn + c - vn, self.k)

        a1 = (dp - rho * c * dqn) / (2.0 * c2)
        a3 = (dp + rho * c * dqn) / (2.0 * c2)
        a2 = drho - dp / c2

        c_ = c[..., None]
        one = np.ones_like(qn)[..., None]
        r1 = np.concatenate([one, u - c_ * n, (H - c * qn)[..., None]], axis=-1)
        r3 = np.concatenate([one, u + c_ * n, (H + c * qn)[..., None]], axis=-1)
        r2 = np.concatenate([one, u, (0.5 * q2)[..., None]], axis=-1)
        shear_u = rho[..., None] * (du - dqn[..., None] * n)
        shear = np.concatenate(
            [np.zeros_like(one), shear_u, (rho * (_dot(u, du) - qn * dqn))[..., None]], axis=-1
        )
        diss = (
            (lam1 * a1)[..., None] * r1
            + lam2[..., None] * (a2[..., None] * r2 + shear)
            + (lam3 * a3)[..., None] * r3
        )
        return 0.5 * (fp + fm - diss)


def reference_numerical_flux(law: ConservationLaw, UXp, UXm, N, G, g, v=0.0, x=None, g_minus=None):
    """Numerical flux of the transformed (reference-domain) flux.

    Each trace is mapped back to a physical state with its own side's mapping
    Jacobian (``g`` interior, ``g_minus`` exterior, defaulting to ``g``).
    """
    from .errors import InvertedElementError

    d = law.dim
    N = _as_vec(N, d)
    G = np.asarray(G)
    if G.ndim == 0 or G.shape[-2:] != (d, d):
        G = np.asarray(G).reshape(np.shape(G) + (1, 1)) if d == 1 else G
    g = np.asarray(g)
    gm = g if g_minus is None else np.asarray(g_minus)
    if np.any(np.real(g) <= 0) or np.any(np.real(gm) <= 0):
        raise InvertedElementError("nonpositive mapping Jacobian at a face")
    GinvT = np.swapaxes(np.linalg.inv(G), -1, -2)
    a = g[..., None] * np.einsum("...ij,...j->...i", GinvT, N)
    na = np.sqrt(_dot(a, a))
    n = a / na[..., None]
    Up = np.asarray(UXp) / g[..., None]
    Um = np.asarray(UXm) / gm[..., None]
    return na[..., None] * law.numerical_flux(Up, Um, n, v, x)


def transformed_flux(law: ConservationLaw, WX, G, g=None, v=0.0, x=None):
    """``[det(G) F(W/det G) - W v^T] G^{-T}``."""
    from .errors import InvertedElementError

    d = law.dim
    G = np.asarray(G)
    if d == 1 and (G.ndim == 0 or G.shape[-2:] != (1, 1)):
        G = G.reshape(np.shape(G) + (1, 1))
    det = np.linalg.det(G)
    if np.any(det <= 0):
        raise InvertedElementError("singular or inverted deformation gradient")
    WX = np.asarray(WX)
    v = _as_vec(v, d)
    U = WX / det[..., None]
    F = det[..., None, None] * law.flux(U, x) - WX[..., :, None] * v[..., None, :]
    GinvT = np.swapaxes(np.linalg.inv(G), -1, -2)
    return F @ GinvT


def rankine_hugoniot_speed(law: ConservationLaw, UL, UR, n, x=None, tol: float = 1e-8) -> float:
    """Least-squares shock speed of the jump ``UL | UR`` across normal ``n``.

    Exact for scalar laws; for systems it is the speed that best satisfies the
    jump conditions in the Euclidean sense.
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    dU = UL - UR
    if np.max(np.abs(dU)) < tol * max(1.0, float(np.max(np.abs(UL)))):
        raise DegenerateJumpError("jump below tolerance; no shock speed defined")
    n = _as_vec(n, law.dim)
    fl = np.einsum("ij,j->i", law.flux(UL, x).reshape(law.m, law.dim), n.reshape(-1))
    fr = np.einsum("ij,j->i", law.flux(UR, x).reshape(law.m, law.dim), n.reshape(-1))
    return float(np.dot(dU, fl - fr) / np.dot(dU, dU))
