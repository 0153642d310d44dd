"""Nodal reference elements: Lagrange bases and quadrature rules.

1D elements live on ``[-1, 1]`` with Gauss-Lobatto nodes.  2D elements are
the unit triangle ``(0,0), (1,0), (0,1)``; only degrees 1 and 2 are provided,
for which the equispaced nodes coincide with warp-and-blend nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


def gauss_lobatto_nodes(p: int) -> np.ndarray:
    if p < 1:
        raise ValueError("degree must be >= 1")
    if p == 1:
        return np.array([-1.0, 1.0])
    interior = np.sort(np.real(L.Legendre.basis(p).deriv().roots()))
    return np.concatenate([[-1.0], interior, [1.0]])


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return L.leggauss(n)


def triangle_quadrature(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed (Duffy) Gauss rule on the unit triangle, exact to degree 2n-2."""
    t, w = gauss_legendre(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    u, s = np.meshgrid(t, t, indexing="ij")
    wu, ws = np.meshgrid(w, w, indexing="ij")
    x = u * (1.0 - s)
    y = s
    weights = wu * ws * (1.0 - s)
    return np.stack([x.ravel(), y.ravel()], axis=-1), weights.ravel()


class _Lagrange1D:
    def __init__(self, nodes: np.ndarray):
        self.p = len(nodes) - 1
        self.coeffs = np.linalg.inv(L.legvander(nodes, self.p))
        self.dcoeffs = L.legder(self.coeffs, axis=0)

    def values(self, pts):
        return L.legvander(np.asarray(pts, dtype=float), self.p) @ self.coeffs

    def derivatives(self, pts):
        if self.p == 0:
            return np.zeros((np.size(pts), 1))
        return L.legvander(np.asarray(pts, dtype=float), self.p - 1) @ self.dcoeffs


def _triangle_exponents(p: int):
    return [(a, b) for tot in range(p + 1) for b in range(tot + 1) for a in [tot - b]]


class _LagrangeTriangle:
    def __init__(self, nodes: np.ndarray):
        n = len(nodes)
        p = int(round((-3 + np.sqrt(1 + 8 * n)) / 2))
        self.p = p
        self.exps = _triangle_exponents(p)
        V = self._monomials(nodes)
        self.coeffs = np.linalg.inv(V)

    def _monomials(self, pts):
        pts = np.atleast_2d(pts)
        return np.stack([pts[:, 0] ** a * pts[:, 1] ** b for a, b in self.exps], axis=-1)

    def values(self, pts):
        return self._monomials(pts) @ self.coeffs

    def gradients(self, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        dx = np.stack([a * x ** max(a - 1, 0) * y**b if a else 0 * x for a, b in self.exps], -1)
        dy = np.stack([b * x**a * y ** max(b - 1, 0) if b else 0 * x for a, b in self.exps], -1)
        return np.stack([dx @ self.coeffs, dy @ self.coeffs], axis=-1)


def triangle_nodes(p: int) -> np.ndarray:
    return np.array([(i / p, j / p) for j in range(p + 1) for i in range(p + 1 - j)])


@dataclass
class ReferenceElement:
    """Degree-``p`` nodal element with tabulated basis at its quadrature points."""

    p: int
    dim: int
    nodes: np.ndarray
    quad_points: np.ndarray
    quad_weights: np.ndarray
    face_points: list = field(default_factory=list)
    face_weights: list = field(default_factory=list)
    face_normals: list = field(default_factory=list)
    _basis: object = field(default=None, repr=False)

    @property
    def nb(self) -> int:
        return len(self.nodes)

    @property
    def measure(self) -> float:
        return float(np.sum(self.quad_weights))

    def basis(self, pts) -> np.ndarray:
        """Basis values, shape ``(npts, nb)``."""
        if self.dim == 1:
            return self._basis.values(np.asarray(pts).reshape(-1))
        return self._basis.values(pts)

    def grad(self, pts) -> np.ndarray:
        """Basis gradients, shape ``(npts, nb, dim)``."""
        if self.dim == 1:
            return self._basis.derivatives(np.asarray(pts).reshape(-1))[..., None]
        return self._basis.gradients(pts)

    @property
    def basis_vals(self) -> np.ndarray:
        return self.basis(self.quad_points)

    @property
    def basis_grads(self) -> np.ndarray:
        return self.grad(self.quad_points)


@lru_cache(maxsize=None)
def build_reference_element(p: int, d: int = 1, n_quad: int | None = None) -> ReferenceElement:
    """Reference element of degree ``p`` in dimension ``d``.

    1D: Gauss-Lobatto nodes and a ``p+3``-point Gauss-Legendre rule (override
    with ``n_quad``).  2D: unit triangle, ``p`` in {1, 2}, rule exact to
    degree ``2p+3`` or better.
    """
    if p < 1:
        raise ValueError(f"unsupported degree p={p} (need p >= 1)")
    if d == 1:
        nodes = gauss_lobatto_nodes(p)
        xq, wq = gauss_legendre(n_quad or p + 3)
        el = ReferenceElement(
            p, 1, nodes[:, None], xq[:, None], wq,
            face_points=[np.array([[-1.0]]), np.array([[1.0]])],
            face_weights=[np.array([1.0]), np.array([1.0])],
            face_normals=[np.array([-1.0]), np.array([1.0])],
        )
        el._basis = _Lagrange1D(nodes)
        return el
    if d == 2:
        if p > 2:
            raise ValueError(f"unsupported (p, d) = ({p}, {d}); simplex elements support p <= 2")
        nodes = triangle_nodes(p)
        xq, wq = triangle_quadrature(n_quad or p + 3)
        t, w = gauss_legendre(p + 3)
        t = 0.5 * (t + 1.0)
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        fpts, fw, fn = [], [], []
        for a, b in [(0, 1), (1, 2), (2, 0)]:
            e = verts[b] - verts[a]
            fpts.append(verts[a] + t[:, None] * e)
            fw.append(0.5 * w * np.linalg.norm(e))
            nrm = np.array([e[1], -e[0]])
            fn.append(nrm / np.linalg.norm(nrm))
        el = ReferenceElement(p, 2, nodes, xq, wq, fpts, fw, fn)
        el._basis = _LagrangeTriangle(nodes)
        return el
    raise ValueError(f"unsupported (p, d) = ({p}, {d})")
