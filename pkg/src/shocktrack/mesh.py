"""Moving meshes: mapping quantities, distortion metric, smoothing and I/O.

Coordinates are stored flat, node-major then coordinate-minor, so a mesh
with ``N`` nodes in ``d`` dimensions has coordinate vectors of length
``N*d``.  In 1D that is simply the node positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .elements import build_reference_element
from .errors import InvertedElementError, UntanglingError

DEFAULT_DELTA = 1e-3


@dataclass
class MovingMesh:
    """Reference mesh of continuous degree-``q`` Lagrange elements.

    ``connectivity[e]`` lists the element's nodes in the order of the
    reference element's nodes (left to right in 1D).
    """

    dim: int
    q: int
    ref_coords: np.ndarray
    connectivity: np.ndarray
    boundary_markers: dict[int, str] = field(default_factory=dict)
    shock_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    periodic: bool = False

    def __post_init__(self):
        self.ref_coords = np.asarray(self.ref_coords, dtype=float).reshape(-1)
        self.connectivity = np.asarray(self.connectivity, dtype=int)
        self.shock_nodes = np.asarray(self.shock_nodes, dtype=int).reshape(-1)

    @property
    def n_nodes(self) -> int:
        return self.ref_coords.size // self.dim

    @property
    def n_elements(self) -> int:
        return len(self.connectivity)

    @property
    def element(self):
        return build_reference_element(self.q, self.dim)

    def node_coords(self, coords=None) -> np.ndarray:
        c = self.ref_coords if coords is None else np.asarray(coords)
        return c.reshape(self.n_nodes, self.dim)

    def boundary_nodes(self) -> np.ndarray:
        return np.array(sorted(self.boundary_markers), dtype=int)

    def fixed_nodes(self) -> np.ndarray:
        return np.union1d(self.boundary_nodes(), self.shock_nodes)

    def vertex_nodes(self) -> np.ndarray:
        """1D only: nodes at element ends, left to right."""
        return np.concatenate([self.connectivity[:, 0], self.connectivity[-1:, -1]])


@dataclass
class MeshConfiguration:
    coords: np.ndarray
    velocity: np.ndarray | None = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.velocity is None:
            self.velocity = np.zeros_like(self.coords)


def interval_mesh(segments, q: int = 1, periodic: bool = False, shock_at=()) -> MovingMesh:
    """1D mesh made of equispaced segments ``[(a, b, n_elements), ...]``.

    ``shock_at`` lists positions (segment breakpoints) whose nodes are marked
    as shock nodes.
    """
    verts = [segments[0][0]]
    for a, b, n in segments:
        if not np.isclose(a, verts[-1]):
            raise ValueError("segments must be contiguous")
        verts.extend(np.linspace(a, b, n + 1)[1:])
    verts = np.asarray(verts, dtype=float)
    ne = len(verts) - 1
    ref = build_reference_element(q, 1).nodes[:, 0]
    coords = [verts[0]]
    for e in range(ne):
        a, b = verts[e], verts[e + 1]
        coords.extend(a + 0.5 * (ref[1:] + 1.0) * (b - a))
    coords = np.asarray(coords)
    conn = np.arange(ne)[:, None] * q + np.arange(q + 1)[None, :]
    last = len(coords) - 1
    markers = {0: "left", last: "right"} if not periodic else {0: "periodic-0", last: "periodic-0"}
    shock = []
    for s in shock_at:
        i = int(np.argmin(np.abs(verts - s)))
        if not np.isclose(verts[i], s):
            raise ValueError(f"shock location {s} is not a mesh vertex")
        shock.append(i * q)
    return MovingMesh(1, q, coords, conn, markers, np.array(shock, dtype=int), periodic)


# -- mapping quantities ------------------------------------------------------

def element_jacobians(mesh: MovingMesh, coords, points) -> np.ndarray:
    """``dx/dxi`` for every element at reference points, ``(n_el, npts, d, d)``."""
    el = mesh.element
    dchi = el.grad(points)
    X = mesh.node_coords(coords)[mesh.connectivity]
    return np.einsum("eak,pam->epkm", X, dchi)


def deformation_gradients(mesh: MovingMesh, coords, points):
    """Deformation gradient ``G`` (reference to physical) at points, and ``det(dX/dxi)``."""
    Jx = element_jacobians(mesh, coords, points)
    Jr = element_jacobians(mesh, mesh.ref_coords, points)
    G = Jx @ np.linalg.inv(Jr)
    return G, np.linalg.det(Jr)


def mapping_quantities(mesh: MovingMesh, config: MeshConfiguration, element: int, points) -> dict:
    """``G``, ``g = det G``, mapping velocity ``v`` and physical point ``x``."""
    el = mesh.element
    pts = np.asarray(points, dtype=float).reshape(-1, mesh.dim)
    nodes = mesh.connectivity[element]
    chi = el.basis(pts)
    dchi = el.grad(pts)
    x_nodes = mesh.node_coords(config.coords)[nodes]
    X_nodes = mesh.node_coords()[nodes]
    v_nodes = np.asarray(config.velocity).reshape(mesh.n_nodes, mesh.dim)[nodes]
    Jx = np.einsum("ak,pam->pkm", x_nodes, dchi)
    Jr = np.einsum("ak,pam->pkm", X_nodes, dchi)
    G = Jx @ np.linalg.inv(Jr)
    return {
        "G": G,
        "g": np.linalg.det(G),
        "v": chi @ v_nodes,
        "x": chi @ x_nodes,
    }


@dataclass
class Validity:
    valid: bool
    min_det: float
    worst_element: int


def check_validity(mesh: MovingMesh, coords, points=None) -> Validity:
    """Smallest ``det G`` over all elements' quadrature points."""
    el = mesh.element
    pts = el.quad_points if points is None else points
    G, _ = deformation_gradients(mesh, coords, pts)
    det = np.linalg.det(G)
    per_el = det.min(axis=1)
    worst = int(np.argmin(per_el))
    return Validity(bool(per_el[worst] > 0), float(per_el[worst]), worst)


# -- distortion metric -------------------------------------------------------

def regularized_det(det, delta: float):
    return 0.5 * (det + np.sqrt(det**2 + 4.0 * delta**2))


def distortion_integrand(G, delta: float | None = None) -> np.ndarray:
    """Pointwise ``(|G|_F^2 / (d det^{2/d}))^2``; ``inf`` where ``det <= 0`` unless regularized."""
    G = np.asarray(G, dtype=float)
    d = G.shape[-1]
    det = np.linalg.det(G)
    fro2 = np.sum(G * G, axis=(-2, -1))
    if delta is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(det > 0, fro2 / (d * np.abs(det) ** (2.0 / d)), np.inf)
    else:
        q = fro2 / (d * regularized_det(det, delta) ** (2.0 / d))
    return q**2


def distortion_metric(G, weights) -> float:
    """Quadrature of the distortion integrand; ``weights`` carry the reference measure."""
    return float(np.sum(np.asarray(weights) * distortion_integrand(G)))


def regularized_distortion(G, weights, delta: float = DEFAULT_DELTA) -> float:
    if delta <= 0:
        raise ValueError("delta must be positive")
    return float(np.sum(np.asarray(weights) * distortion_integrand(G, delta)))


def _cofactor(G):
    d = G.shape[-1]
    if d == 1:
        return np.ones_like(G)
    if d == 2:
        C = np.empty_like(G)
        C[..., 0, 0] = G[..., 1, 1]
        C[..., 0, 1] = -G[..., 1, 0]
        C[..., 1, 0] = -G[..., 0, 1]
        C[..., 1, 1] = G[..., 0, 0]
        return C
    return np.linalg.det(G)[..., None, None] * np.swapaxes(np.linalg.inv(G), -1, -2)


def mesh_distortion(mesh: MovingMesh, coords, delta: float = DEFAULT_DELTA, grad: bool = False):
    """Total regularized distortion of a configuration (and its coordinate gradient)."""
    el = mesh.element
    d = mesh.dim
    pts, w = el.quad_points, el.quad_weights
    dchi = el.grad(pts)
    Jx = element_jacobians(mesh, coords, pts)
    Jr = element_jacobians(mesh, mesh.ref_coords, pts)
    Jr_inv = np.linalg.inv(Jr)
    G = Jx @ Jr_inv
    wv = w[None, :] * np.abs(np.linalg.det(Jr))
    det = np.linalg.det(G)
    gh = regularized_det(det, delta)
    fro2 = np.sum(G * G, axis=(-2, -1))
    Q = fro2 / (d * gh ** (2.0 / d))
    E = float(np.sum(wv * Q**2))
    if not grad:
        return E
    dgh = 0.5 * (1.0 + det / np.sqrt(det**2 + 4.0 * delta**2))
    dQ = (2.0 / (d * gh ** (2.0 / d)))[..., None, None] * G - (
        (2.0 / d) * Q / gh * dgh
    )[..., None, None] * _cofactor(G)
    dE_dG = (2.0 * wv * Q)[..., None, None] * dQ
    dE_dJx = dE_dG @ np.swapaxes(Jr_inv, -1, -2)
    g_el = np.einsum("epkm,pam->eak", dE_dJx, dchi)
    out = np.zeros((mesh.n_nodes, d))
    np.add.at(out, mesh.connectivity, g_el)
    return E, out.reshape(-1)


# -- shock-node advection and smoothing --------------------------------------

def advect_shock_nodes(mesh: MovingMesh, coords, speeds, dt_stage: float, normals=None) -> np.ndarray:
    """Move each shock node by ``speed * dt_stage`` along its shock normal."""
    out = np.array(coords, dtype=float).reshape(mesh.n_nodes, mesh.dim)
    speeds = np.asarray(speeds, dtype=float).reshape(-1)
    if normals is None:
        normals = np.ones((len(mesh.shock_nodes), mesh.dim)) / np.sqrt(mesh.dim)
    normals = np.asarray(normals, dtype=float).reshape(len(mesh.shock_nodes), mesh.dim)
    out[mesh.shock_nodes] += (speeds * dt_stage)[:, None] * normals
    return out.reshape(-1)


def smooth_mesh(mesh: MovingMesh, coords, fixed=None, delta: float = DEFAULT_DELTA,
                max_iters: int = 200, rtol: float = 1e-8) -> np.ndarray:
    """Reposition non-fixed nodes for element quality.

    1D: vertices between consecutive fixed vertices are equidistributed and
    high-order nodes sit at affine images of their reference positions.
    2D: gradient descent with backtracking on the regularized distortion.
    """
    fixed = mesh.fixed_nodes() if fixed is None else np.asarray(fixed, dtype=int)
    if mesh.dim == 1:
        return _smooth_1d(mesh, coords, fixed)
    return _smooth_nd(mesh, coords, fixed, delta, max_iters, rtol)


def _smooth_1d(mesh: MovingMesh, coords, fixed) -> np.ndarray:
    x = np.array(coords, dtype=float)
    verts = mesh.vertex_nodes()
    is_fixed = np.isin(verts, fixed)
    is_fixed[0] = is_fixed[-1] = True
    idx = np.flatnonzero(is_fixed)
    vx = x[verts]
    new_v = np.interp(np.arange(len(verts)), idx, vx[idx])
    x[verts] = new_v
    if mesh.q > 1:
        ref = mesh.element.nodes[1:-1, 0]
        for e, nodes in enumerate(mesh.connectivity):
            a, b = new_v[e], new_v[e + 1]
            x[nodes[1:-1]] = a + 0.5 * (ref + 1.0) * (b - a)
    return x


def _smooth_nd(mesh, coords, fixed, delta, max_iters, rtol) -> np.ndarray:
    x = np.array(coords, dtype=float)
    d = mesh.dim
    free = np.ones(mesh.n_nodes, dtype=bool)
    free[fixed] = False
    mask = np.repeat(free, d)
    X = mesh.node_coords()
    h = np.min([np.linalg.norm(X[c[1]] - X[c[0]]) for c in mesh.connectivity])
    E, g = mesh_distortion(mesh, x, delta, grad=True)
    alpha = None
    for _ in range(max_iters):
        gf = np.where(mask, g, 0.0)
        gnorm = np.max(np.abs(gf))
        if gnorm == 0:
            break
        if alpha is None:
            alpha = 0.25 * h / gnorm
        else:
            alpha *= 2.0
        while True:
            trial = x - alpha * gf
            Et = mesh_distortion(mesh, trial, delta)
            if np.isfinite(Et) and Et <= E - 1e-4 * alpha * np.dot(gf, gf):
                break
            alpha *= 0.5
            if alpha * gnorm < 1e-14 * h:
                trial = x
                Et = E
                break
        decrease = (E - Et) / max(abs(E), 1e-300)
        x = trial
        E, g = mesh_distortion(mesh, x, delta, grad=True)
        if decrease < rtol:
            break
    val = check_validity(mesh, x)
    if not val.valid:
        raise UntanglingError(
            f"smoothing failed to untangle (min det {val.min_det:.3e})", val.worst_element
        )
    return x


def jacobian_ratio_at_nodes(mesh: MovingMesh, coords_new, coords_old, points) -> np.ndarray:
    """``g_new / g_old`` at reference points of every element, ``(n_el, npts)``."""
    Jn = np.linalg.det(element_jacobians(mesh, coords_new, points))
    Jo = np.linalg.det(element_jacobians(mesh, coords_old, points))
    if np.any(Jo <= 0):
        raise InvertedElementError("old configuration is inverted", int(np.argmin(Jo.min(1))))
    return Jn / Jo


# -- plain-text I/O ----------------------------------------------------------

def write_mesh(mesh: MovingMesh, path) -> None:
    lines = [
        "# shocktrack mesh",
        f"dim {mesh.dim}",
        f"order {mesh.q}",
        f"periodic {int(mesh.periodic)}",
        f"nodes {mesh.n_nodes}",
    ]
    for row in mesh.node_coords():
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append(f"elements {mesh.n_elements}")
    for row in mesh.connectivity:
        lines.append(" ".join(str(int(v)) for v in row))
    lines.append(f"boundary {len(mesh.boundary_markers)}")
    for node, tag in sorted(mesh.boundary_markers.items()):
        lines.append(f"{node} {tag}")
    lines.append(f"shock {len(mesh.shock_nodes)}")
    lines.append(" ".join(str(int(v)) for v in mesh.shock_nodes))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> MovingMesh:
    rows = [ln.strip() for ln in Path(path).read_text().splitlines()]
    rows = [r for r in rows if r and not r.startswith("#")]
    it = iter(rows)

    def header(name):
        key, val = next(it).split()
        if key != name:
            raise ValueError(f"expected '{name}' section, found '{key}'")
        return int(val)

    dim = header("dim")
    q = header("order")
    periodic = bool(header("periodic"))
    n = header("nodes")
    coords = np.array([[float(v) for v in next(it).split()] for _ in range(n)])
    ne = header("elements")
    conn = np.array([[int(v) for v in next(it).split()] for _ in range(ne)])
    nb = header("boundary")
    markers = {}
    for _ in range(nb):
        node, tag = next(it).split()
        markers[int(node)] = tag
    ns = header("shock")
    shock = np.array([int(v) for v in next(it, "").split()], dtype=int) if ns else np.zeros(0, int)
    return MovingMesh(dim, q, coords.reshape(-1), conn, markers, shock, periodic)
