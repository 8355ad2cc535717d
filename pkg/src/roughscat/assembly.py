"""Finite element system and right-hand sides.

The unknown is the nodal P1 field on the whole mesh.  The system matrix is
the Galerkin matrix ``M[i, j] = a(phi_j, phi_i)`` of

    a(u, v) = int grad u . grad v - k^2 u v  - int_top v T1 u - int_bottom v T2 u
              - i int_coated beta u v

restricted to the nodes off the sound-soft boundary.  Near the lateral walls
the volume and trace terms are written in complex-stretched coordinates
(see :class:`roughscat.geometry.AbsorbingLayer`); inside ``|x1| < start``
nothing changes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps
from scipy import special as sp

from . import geometry as geo
from .dtn import StretchedTraceOperator
from .quadrature import TRI7_BARY, TRI7_WEIGHTS, clipped_moments, gauss_legendre, tri7_points
from .special import (PointSource, SourceKind, fundamental_solution, fundamental_solution_grad,
                      hspsw_patch_coefficients, psw_patch_coefficients, wavenumber, _fundamental_hessian)

__all__ = [
    "DEFAULT_MASS_BLEND",
    "element_matrices",
    "SystemMatrix",
    "assemble_system",
    "annulus_elements",
    "apply_absorbing_shift",
    "LocalSource",
    "DiskIndicator",
    "SmoothedIncident",
    "RhsVector",
    "rhs_local_source",
    "rhs_point_source",
    "default_delta",
    "dump_matrix",
]

log = logging.getLogger(__name__)

#: weight of the lumped mass in the element mass matrix
DEFAULT_MASS_BLEND = 0.5


def element_matrices(corners: np.ndarray):
    """P1 element matrices for a batch of triangles.

    Parameters
    ----------
    corners : (m, 3, 2) array

    Returns
    -------
    kx, ky : (m, 3, 3)
        ``int d1 phi_i d1 phi_j`` and ``int d2 phi_i d2 phi_j``.
    mass_c, mass_l : (m, 3, 3)
        Consistent and row-lumped mass matrices.
    area : (m,)
    """
    p = np.asarray(corners, float)
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    det = b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0]
    area = 0.5 * det
    gx, gy = b / det[:, None], c / det[:, None]
    kx = area[:, None, None] * gx[:, :, None] * gx[:, None, :]
    ky = area[:, None, None] * gy[:, :, None] * gy[:, None, :]
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mass_c = area[:, None, None] * base
    mass_l = area[:, None, None] * np.eye(3) / 3.0
    return kx, ky, mass_c, mass_l, area


def _scatter(tris: np.ndarray, emat: np.ndarray, n: int) -> sps.csr_matrix:
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return sps.coo_matrix((emat.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@dataclass
class SystemMatrix:
    """Galerkin matrix over the free nodes with its additive parts.

    ``matrix = volume + layer - dtn_top - dtn_bottom - 1j * impedance + shift``
    where each part is stored (over the free nodes) in :attr:`parts`.
    """

    matrix: sps.csc_matrix
    parts: dict
    free: np.ndarray
    n_full: int
    mesh: geo.Mesh
    domain: geo.StripDomain
    k1_sq: complex
    k2_sq: complex
    blend: float
    top_free: np.ndarray
    bottom_free: np.ndarray
    trace_ops: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    def restrict(self, vec):
        return np.asarray(vec)[self.free]

    def expand(self, vec):
        out = np.zeros(self.n_full, dtype=complex)
        out[self.free] = vec
        return out

    def symmetry_defect(self) -> float:
        d = self.matrix - self.matrix.T
        scale = max(abs(self.matrix).max(), 1e-300)
        return float(abs(d).max() / scale) if d.nnz else 0.0


def _element_k_sq(mesh: geo.Mesh, k1_sq, k2_sq):
    return np.where(mesh.regions == geo.REGION_UPPER, complex(k1_sq), complex(k2_sq))


def _volume_parts(mesh, domain, k1_sq, k2_sq, blend, k_ref):
    kx, ky, mc, ml, _ = element_matrices(mesh.corners)
    mass = (1.0 - blend) * mc + blend * ml
    ksq = _element_k_sq(mesh, k1_sq, k2_sq)
    if domain.layer is not None:
        s = domain.layer.stretch(mesh.centroids[:, 0], k_ref)
    else:
        s = np.ones(len(mesh.triangles), dtype=complex)
    emat = kx / s[:, None, None] + s[:, None, None] * ky - (ksq * s)[:, None, None] * mass
    in_layer = s != 1.0
    n = mesh.n_vertices
    vol = _scatter(mesh.triangles[~in_layer], emat[~in_layer], n)
    lay = _scatter(mesh.triangles[in_layer], emat[in_layer], n)
    return vol, lay


def _impedance_matrix(mesh, domain):
    n = mesh.n_vertices
    edges = mesh.edges[mesh.edge_tags == geo.TAG_COATED]
    if len(edges) == 0 or domain.obstacle is None:
        return sps.csr_matrix((n, n))
    p0, p1 = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
    length = np.hypot(*(p1 - p0).T)
    tq, wq = gauss_legendre(3)
    rows, cols, vals = [], [], []
    for t, w in zip(tq, wq):
        x = p0 + t * (p1 - p0)
        beta = domain.obstacle.beta(domain.obstacle.parameter_of(x))
        n_loc = np.array([1.0 - t, t])
        for a in range(2):
            for b in range(2):
                rows.append(edges[:, a])
                cols.append(edges[:, b])
                vals.append(w * length * beta * n_loc[a] * n_loc[b])
    return sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()


def _trace_operator(mesh, domain, k_ref):
    stretch = None
    if domain.layer is not None:
        stretch = domain.layer.stretch(mesh.vertices[mesh.top_nodes, 0], k_ref)
    return StretchedTraceOperator(mesh.n_intervals, mesh.A, stretch)


def _dense_block(nodes, block, n):
    rows = np.repeat(nodes, len(nodes))
    cols = np.tile(nodes, len(nodes))
    return sps.coo_matrix((block.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_system(mesh: geo.Mesh, domain: geo.StripDomain, k1_sq, k2_sq,
                    blend: float = DEFAULT_MASS_BLEND, check_regime: bool = True,
                    trace_op: Optional[StretchedTraceOperator] = None) -> SystemMatrix:
    """Assemble the Galerkin system.

    Parameters
    ----------
    mesh, domain
        Mesh of ``domain`` from :func:`roughscat.geometry.generate_mesh`.
    k1_sq, k2_sq : complex
        Squared wavenumbers above and below the interface.
    blend : float
        Weight of the lumped mass (0 gives the consistent mass matrix).
    check_regime : bool
        Validate the wavenumbers against the admissible regimes.
    """
    from .solve import WaveNumbers, validate_regime

    k1_sq, k2_sq = complex(k1_sq), complex(k2_sq)
    if check_regime:
        validate_regime(WaveNumbers(k1_sq, k2_sq), domain.obstacle)
    k_ref = wavenumber(k1_sq).real if k1_sq.real > 0 else 1.0
    n = mesh.n_vertices
    vol, lay = _volume_parts(mesh, domain, k1_sq, k2_sq, blend, k_ref)
    imp = _impedance_matrix(mesh, domain)
    op = trace_op if trace_op is not None else _trace_operator(mesh, domain, k_ref)
    d_top = _dense_block(mesh.top_nodes, op.galerkin_block(k1_sq), n)
    d_bot = _dense_block(mesh.bottom_nodes, op.galerkin_block(k2_sq), n)

    soft = mesh.nodes_with_tag(geo.TAG_SOFT)
    mask = np.ones(n, bool)
    mask[soft] = False
    free = np.nonzero(mask)[0]
    full_to_free = -np.ones(n, dtype=np.int64)
    full_to_free[free] = np.arange(len(free))

    def sub(a):
        return a.tocsr()[free][:, free].tocsc()

    parts = {
        "volume": sub(vol),
        "layer": sub(lay),
        "dtn_top": sub(d_top),
        "dtn_bottom": sub(d_bot),
        "impedance": sub(imp),
    }
    mat = (parts["volume"] + parts["layer"] - parts["dtn_top"] - parts["dtn_bottom"]
           - 1j * parts["impedance"]).tocsc()
    mat.sort_indices()
    return SystemMatrix(mat, parts, free, n, mesh, domain, k1_sq, k2_sq, float(blend),
                        full_to_free[mesh.top_nodes], full_to_free[mesh.bottom_nodes],
                        {"trace": op, "k_ref": k_ref})


def annulus_elements(mesh: geo.Mesh, domain: geo.StripDomain, thickness: Optional[float] = None) -> np.ndarray:
    """Lower-region elements forming the layer ``D' \\ D`` around the obstacle.

    The layer always contains every element touching the obstacle boundary
    and is widened to all lower-region elements whose centroid lies within
    ``thickness`` of the boundary.
    """
    if domain.obstacle is None:
        raise ValueError("the absorbing shift needs an obstacle")
    bnodes = np.union1d(mesh.nodes_with_tag(geo.TAG_COATED), mesh.nodes_with_tag(geo.TAG_SOFT))
    touch = np.isin(mesh.triangles, bnodes).any(axis=1)
    sel = touch
    if thickness:
        d = domain.distance_to_obstacle(mesh.centroids)
        sel = sel | (d <= thickness)
    return np.nonzero(sel & (mesh.regions == geo.REGION_LOWER))[0]


def apply_absorbing_shift(system: SystemMatrix, alpha: float, thickness: Optional[float] = None) -> SystemMatrix:
    """Return the system with ``k2^2`` replaced by ``k2^2 + i alpha`` on ``D' \\ D``.

    The change is ``-i alpha P`` with ``P`` the (blended) mass matrix of the
    layer; ``alpha = 0`` reproduces the input matrix exactly.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    mesh = system.mesh
    els = annulus_elements(mesh, system.domain, thickness)
    _, _, mc, ml, _ = element_matrices(mesh.corners[els])
    mass = (1.0 - system.blend) * mc + system.blend * ml
    P = _scatter(mesh.triangles[els], mass, mesh.n_vertices).tocsr()[system.free][:, system.free].tocsc()
    shift = (-1j * alpha) * P
    parts = dict(system.parts)
    parts["shift"] = shift
    parts["shift_mass"] = P
    mat = (system.matrix + shift).tocsc()
    mat.sort_indices()
    out = replace(system, matrix=mat, parts=parts)
    out.trace_ops = dict(system.trace_ops, alpha=float(alpha))
    return out


def dump_matrix(system: SystemMatrix, path) -> None:
    """Write the system matrix as ``i j re im`` lines (0-based free indices)."""
    coo = system.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")


# --------------------------------------------------------------------------
# Right-hand sides


@dataclass(frozen=True)
class LocalSource:
    """Volume source ``g`` supported in the disk ``B(center, radius)``."""

    func: Callable[[np.ndarray], np.ndarray]
    center: tuple
    radius: float
    l2_norm: Optional[float] = None


@dataclass(frozen=True)
class DiskIndicator:
    """Constant source ``value`` on the disk ``B(center, radius)`` (integrated exactly)."""

    center: tuple
    radius: float
    value: complex = 1.0

    @property
    def l2_norm(self) -> float:
        return float(abs(self.value) * np.sqrt(np.pi) * self.radius)


class SmoothedIncident:
    """Point-source incident field with its singular part replaced in ``B_delta(z)``.

    Outside the ball the values equal the unregularised incident field.
    Inside, the singular profile is the regular patch (``A + B J0(k r)`` for
    PSW, ``(C J1(k r) + D k r) cos(theta)`` for HSPSW) while the image term is
    kept as is.  ``(Delta + k^2)`` of the patch is the piecewise source
    returned by :meth:`source_density`.
    """

    def __init__(self, source: PointSource, delta: float):
        self.source = source
        self.delta = float(delta)
        self.k = source.k
        self.z = np.asarray(source.position, float)
        self.z_img = np.asarray(source.image, float)
        if source.kind is SourceKind.PSW:
            self.coefficients = psw_patch_coefficients(self.k, self.delta)
        else:
            self.coefficients = hspsw_patch_coefficients(self.k, self.delta)

    @property
    def kind(self) -> SourceKind:
        return self.source.kind

    def exact(self, x):
        return self.source.field(x)

    def exact_gradient(self, x):
        return self.source.gradient(x)

    def _split(self, x):
        x = np.asarray(x, float)
        d = x - self.z
        r = np.hypot(d[..., 0], d[..., 1])
        return x, d, r, r < self.delta

    def _image_value(self, x):
        if self.kind is SourceKind.PSW:
            return -fundamental_solution(self.k, x, self.z_img)
        return -fundamental_solution_grad(self.k, x, self.z_img)[..., 0]

    def _image_gradient(self, x):
        if self.kind is SourceKind.PSW:
            return -fundamental_solution_grad(self.k, x, self.z_img)
        return -_fundamental_hessian(self.k, x, self.z_img)[..., 0, :]

    def value(self, x):
        x, d, r, inside = self._split(x)
        out = np.empty(r.shape, dtype=complex)
        out[~inside] = self.exact(x[~inside])
        if np.any(inside):
            xi, di, ri = x[inside], d[inside], r[inside]
            k = self.k
            if self.kind is SourceKind.PSW:
                a, b = self.coefficients
                patch = a + b * sp.jv(0, k * ri)
            else:
                c, dd = self.coefficients
                patch = (c * _j1_over_r(k, ri) + dd * k) * di[:, 0]
            out[inside] = patch + self._image_value(xi)
        return out

    def gradient(self, x):
        x, d, r, inside = self._split(x)
        out = np.empty(r.shape + (2,), dtype=complex)
        out[~inside] = self.exact_gradient(x[~inside])
        if np.any(inside):
            xi, di, ri = x[inside], d[inside], r[inside]
            k = self.k
            if self.kind is SourceKind.PSW:
                _, b = self.coefficients
                rad = -b * k * _j1_over_r(k, ri)
                g = rad[:, None] * di
            else:
                c, dd = self.coefficients
                q2 = _j2_over_r2(k, ri)
                g = c * (-k * q2[:, None] * di[:, 0:1] * di)
                g[:, 0] += c * _j1_over_r(k, ri) + dd * k
            out[inside] = g + self._image_gradient(xi)
        return out

    def source_density(self, x):
        """``(Delta + k^2)`` applied to the patched field (zero outside the ball)."""
        x, d, r, inside = self._split(x)
        k = self.k
        if self.kind is SourceKind.PSW:
            a, _ = self.coefficients
            return np.where(inside, a * k * k, 0.0)
        _, dd = self.coefficients
        return np.where(inside, dd * k**3 * d[..., 0], 0.0)

    @property
    def source_l2_norm(self) -> float:
        k = self.k
        if self.kind is SourceKind.PSW:
            a, _ = self.coefficients
            return float(abs(a * k * k) * np.sqrt(np.pi) * self.delta)
        _, dd = self.coefficients
        return float(abs(dd * k**3) * np.sqrt(np.pi / 4.0) * self.delta**2)


def _j1_over_r(k, r):
    r = np.asarray(r, float)
    small = r * abs(k) < 1e-6
    safe = np.where(small, 1.0, r)
    return np.where(small, k / 2.0, sp.jv(1, k * safe) / safe)


def _j2_over_r2(k, r):
    r = np.asarray(r, float)
    small = r * abs(k) < 1e-4
    safe = np.where(small, 1.0, r)
    return np.where(small, k * k / 8.0, sp.jv(2, k * safe) / safe**2)


@dataclass
class RhsVector:
    """Load vector over all mesh nodes, ``b_j = -int g phi_j``."""

    values: np.ndarray
    provenance: str
    incident: Optional[SmoothedIncident] = None
    g_l2_norm: float = float("nan")

    def __mul__(self, s):
        return RhsVector(self.values * s, self.provenance, self.incident, self.g_l2_norm * abs(s))

    __rmul__ = __mul__


def _check_support(domain: geo.StripDomain, center, radius, what: str = "source support"):
    c = np.asarray(center, float)
    if not (abs(c[0]) + radius < domain.A and abs(c[1]) + radius < domain.h):
        raise ValueError(f"{what} must lie strictly inside the strip and away from x2 = +-h")
    if domain.obstacle is not None and domain.distance_to_obstacle(c[None])[0] <= radius + 1e-12:
        raise ValueError(f"{what} touches the obstacle")
    if domain.obstacle is not None and domain.obstacle.contains(c):
        raise ValueError(f"{what} is inside the obstacle")


def _disk_load(mesh: geo.Mesh, center, radius, const: complex, linear_x: complex = 0.0):
    """``int_(B) (const + linear_x (x1 - c1)) phi_j`` for every node."""
    idx, mom = clipped_moments(mesh.corners[np.arange(len(mesh.triangles))], center, radius)
    if len(idx) == 0:
        raise ValueError("the source disk does not meet the mesh")
    p = mesh.corners[idx] - np.asarray(center, float)
    # barycentric coordinates as linear functions a + b x + c y in centred coordinates
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    det = (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])[:, None]
    a = np.stack([x[:, 1] * y[:, 2] - x[:, 2] * y[:, 1],
                  x[:, 2] * y[:, 0] - x[:, 0] * y[:, 2],
                  x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]], axis=1) / det
    b, c = b / det, c / det
    m1, mx, my, mxx, mxy = (mom[:, k : k + 1] for k in range(5))
    loc = const * (a * m1 + b * mx + c * my) + linear_x * (a * mx + b * mxx + c * mxy)
    out = np.zeros(mesh.n_vertices, dtype=complex)
    np.add.at(out, mesh.triangles[idx].ravel(), loc.ravel())
    return out


def rhs_local_source(mesh: geo.Mesh, domain: geo.StripDomain, g) -> RhsVector:
    """Load vector ``-int g phi_j`` for a compactly supported source.

    ``g`` is a :class:`LocalSource` (7-point degree-5 rule on the elements
    meeting its support), a :class:`DiskIndicator` (exact cut-cell
    integration) or ``None``/``0`` for the zero source.
    """
    n = mesh.n_vertices
    if g is None or (np.isscalar(g) and g == 0):
        return RhsVector(np.zeros(n, dtype=complex), "local-source", None, 0.0)
    _check_support(domain, g.center, g.radius)
    if isinstance(g, DiskIndicator):
        vals = -_disk_load(mesh, g.center, g.radius, complex(g.value))
        return RhsVector(vals, "local-source", None, g.l2_norm)
    cen = mesh.centroids
    reach = g.radius + mesh.element_diameters()
    near = np.nonzero(np.hypot(*(cen - np.asarray(g.center, float)).T) < reach)[0]
    qp = tri7_points(mesh.corners[near])
    gv = np.asarray(g.func(qp.reshape(-1, 2)), dtype=complex).reshape(qp.shape[:2])
    area = np.abs(mesh.signed_areas[near])
    loc = np.einsum("q,mq,qi->mi", TRI7_WEIGHTS, gv, TRI7_BARY) * area[:, None]
    out = np.zeros(n, dtype=complex)
    np.add.at(out, mesh.triangles[near].ravel(), -loc.ravel())
    nrm = g.l2_norm
    if nrm is None:
        nrm = float(np.sqrt(np.sum(TRI7_WEIGHTS * np.abs(gv) ** 2 * area[:, None])))
    return RhsVector(out, "local-source", None, nrm)


def _local_size(mesh: geo.Mesh, z, radius) -> float:
    cen = mesh.centroids
    d = np.hypot(*(cen - np.asarray(z, float)).T)
    sel = d < radius
    if not np.any(sel):
        sel = d <= d.min() + 1e-12
    return float(mesh.element_diameters()[sel].max())


def default_delta(mesh: geo.Mesh, domain: geo.StripDomain, z, min_cells: float = 3.0) -> float:
    """Quarter of the clearance to the interface and top line, at least ``min_cells`` cells across."""
    z = np.asarray(z, float)
    clear = min(float(domain.distance_to_interface(z[None])[0]), domain.h - z[1])
    delta = 0.25 * clear
    for _ in range(8):
        grown = max(0.25 * clear, 0.5 * min_cells * _local_size(mesh, z, delta))
        if grown <= delta:
            break
        delta = grown
    return delta


def rhs_point_source(mesh: geo.Mesh, domain: geo.StripDomain, source: PointSource,
                     delta: Optional[float] = None, min_cells: float = 3.0) -> RhsVector:
    """Load vector of the regularised point source.

    The incident field is smoothed inside ``B_delta(z)``; the resulting
    source ``(Delta + k1^2)`` of the smoothed field is integrated exactly over
    the cut elements.
    """
    z = np.asarray(source.position, float)
    if domain.region_of(z[None])[0] != geo.REGION_UPPER:
        raise ValueError("point sources must lie above the interface")
    if domain.region_of(np.asarray(source.image, float)[None])[0] == geo.REGION_UPPER:
        raise ValueError("the image point of the source falls above the interface")
    if abs(z[0]) >= domain.physical_half_width:
        raise ValueError("point source lies in the absorbing layer")
    if delta is None:
        delta = default_delta(mesh, domain, z, min_cells)
    clear_itf = float(domain.distance_to_interface(z[None])[0])
    if delta >= clear_itf or delta >= domain.h - z[1]:
        raise ValueError(f"smoothing radius {delta:.4g} reaches the interface or the top line")
    if domain.obstacle is not None and domain.distance_to_obstacle(z[None])[0] <= delta:
        raise ValueError("smoothing ball meets the obstacle")
    h_loc = _local_size(mesh, z, delta)
    if 2.0 * delta < min_cells * h_loc * (1.0 - 1e-9):
        raise ValueError(f"mesh under-resolves the smoothing ball (2*delta={2 * delta:.4g}, "
                         f"local element size {h_loc:.4g}); refine the mesh or enlarge delta")
    inc = SmoothedIncident(source, delta)
    k = inc.k
    if source.kind is SourceKind.PSW:
        a, _ = inc.coefficients
        load = _disk_load(mesh, z, delta, a * k * k)
        prov = "psw"
    else:
        _, dd = inc.coefficients
        load = _disk_load(mesh, z, delta, 0.0, dd * k**3)
        prov = "hspsw"
    return RhsVector(-load, prov, inc, inc.source_l2_norm)
