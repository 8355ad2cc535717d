"""Field evaluation inside the strip and angular-spectrum continuation outside it."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import geometry as geo
from .assembly import SmoothedIncident, SystemMatrix, element_matrices
from .dtn import TraceSpectrum, mirror_extend
from .quadrature import TRI7_BARY, TRI7_WEIGHTS
from .special import branch_sqrt

__all__ = [
    "ComplexFieldVector",
    "eval_in_strip",
    "eval_gradient_in_strip",
    "quadrature_samples",
    "h1_norm_nodal",
    "h1_norm",
    "l2_error",
    "propagate_up",
    "propagate_down",
    "trace_spectrum",
    "exterior_values",
    "helmholtz_residual_probe",
    "write_field_csv",
]

KINDS = ("smoothed", "total", "scattered", "incident")


@dataclass
class ComplexFieldVector:
    """Nodal P1 coefficients of the smoothed total field ``u~t``.

    The smoothed total field equals the scattered field plus the smoothed
    incident field above the interface and the scattered field below it.
    ``kind`` records what the coefficients represent.
    """

    coefficients: np.ndarray
    mesh: geo.Mesh
    kind: str = "total-smoothed"
    incident: Optional[SmoothedIncident] = None
    domain: Optional[geo.StripDomain] = None

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __mul__(self, s):
        inc = None if self.incident is None else _ScaledIncident([(s, self.incident)])
        return ComplexFieldVector(self.coefficients * s, self.mesh, self.kind, inc, self.domain)

    __rmul__ = __mul__


class _ScaledIncident:
    """Linear combination of smoothed incident fields (for field arithmetic)."""

    def __init__(self, terms):
        flat = []
        for c, inc in terms:
            if isinstance(inc, _ScaledIncident):
                flat += [(c * c2, i2) for c2, i2 in inc.terms]
            elif inc is not None:
                flat.append((c, inc))
        self.terms = flat

    def _sum(self, name, x):
        out = 0.0
        for c, inc in self.terms:
            out = out + c * getattr(inc, name)(x)
        return out

    def value(self, x):
        return self._sum("value", x)

    def gradient(self, x):
        return self._sum("gradient", x)

    def exact(self, x):
        return self._sum("exact", x)

    def exact_gradient(self, x):
        return self._sum("exact_gradient", x)


def _combine(a: ComplexFieldVector, b: ComplexFieldVector, sign: float) -> ComplexFieldVector:
    if a.mesh is not b.mesh:
        raise ValueError("fields live on different meshes")
    inc = _ScaledIncident([(1.0, a.incident), (sign, b.incident)])
    return ComplexFieldVector(a.coefficients + sign * b.coefficients, a.mesh, a.kind, inc, a.domain)


def _upper(field: ComplexFieldVector, tri: np.ndarray) -> np.ndarray:
    return field.mesh.regions[tri] == geo.REGION_UPPER


def eval_in_strip(field: ComplexFieldVector, points, kind: str = "scattered") -> np.ndarray:
    """Evaluate a solved field at points of the strip.

    ``kind`` selects ``"smoothed"`` (the P1 interpolant itself),
    ``"scattered"`` (smoothed incident subtracted above the interface),
    ``"total"`` (unregularised total field) or ``"incident"``.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    pts = np.atleast_2d(np.asarray(points, float))
    tri, bary = field.mesh.locate(pts)
    vals = np.einsum("ni,ni->n", field.coefficients[field.mesh.triangles[tri]], bary)
    if kind == "smoothed" or field.incident is None:
        if kind == "incident":
            return np.zeros(len(pts), dtype=complex)
        return vals
    up = _upper(field, tri)
    out = vals.astype(complex)
    inc = field.incident
    if kind == "incident":
        out = np.zeros(len(pts), dtype=complex)
        out[up] = inc.exact(pts[up])
        return out
    out[up] -= inc.value(pts[up])
    if kind == "total":
        out[up] += inc.exact(pts[up])
    return out


def _element_gradients(mesh: geo.Mesh, tri: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    p = mesh.corners[tri]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    det = (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])[:, None]
    u = coeffs[mesh.triangles[tri]]
    return np.stack([np.sum(u * b / det, axis=1), np.sum(u * c / det, axis=1)], axis=-1)


def eval_gradient_in_strip(field: ComplexFieldVector, points, kind: str = "scattered") -> np.ndarray:
    """Gradient counterpart of :func:`eval_in_strip` (P1 gradient is elementwise constant)."""
    pts = np.atleast_2d(np.asarray(points, float))
    tri, _ = field.mesh.locate(pts)
    g = _element_gradients(field.mesh, tri, field.coefficients)
    if kind == "smoothed" or field.incident is None:
        return g
    up = _upper(field, tri)
    g[up] -= field.incident.gradient(pts[up])
    if kind == "total":
        g[up] += field.incident.exact_gradient(pts[up])
    return g


def quadrature_samples(field: ComplexFieldVector, elements: np.ndarray, kind: str = "scattered"):
    """Values and gradients at the 7-point quadrature nodes of ``elements``.

    Returns ``(values (m, 7), gradients (m, 7, 2), weights (m, 7))``.
    """
    mesh = field.mesh
    elements = np.asarray(elements)
    corners = mesh.corners[elements]
    qp = np.einsum("qi,mid->mqd", TRI7_BARY, corners)
    u = field.coefficients[mesh.triangles[elements]]
    vals = np.einsum("mi,qi->mq", u, TRI7_BARY)
    grads = np.repeat(_element_gradients(mesh, elements, field.coefficients)[:, None, :], 7, axis=1)
    area = np.abs(mesh.signed_areas[elements])
    w = area[:, None] * TRI7_WEIGHTS[None, :]
    if kind != "smoothed" and field.incident is not None:
        up = mesh.regions[elements] == geo.REGION_UPPER
        flat = qp[up].reshape(-1, 2)
        if len(flat):
            shp = qp[up].shape[:2]
            v = field.incident.value(flat).reshape(shp)
            g = field.incident.gradient(flat).reshape(shp + (2,))
            if kind == "total":
                v = v - field.incident.exact(flat).reshape(shp)
                g = g - field.incident.exact_gradient(flat).reshape(shp + (2,))
            vals[up] -= v
            grads[up] -= g
    return vals, grads, w


def h1_norm(field: ComplexFieldVector, elements: np.ndarray, kind: str = "scattered",
            extra: Optional[tuple[Callable, Callable]] = None) -> float:
    """Discrete ``H^1`` norm over a set of elements.

    ``extra = (value_fn, grad_fn)`` adds an analytic function to the field
    before taking the norm (evaluated at the quadrature points).
    """
    vals, grads, w = quadrature_samples(field, elements, kind)
    if extra is not None:
        qp = np.einsum("qi,mid->mqd", TRI7_BARY, field.mesh.corners[np.asarray(elements)])
        flat = qp.reshape(-1, 2)
        vals = vals + extra[0](flat).reshape(vals.shape)
        grads = grads + extra[1](flat).reshape(grads.shape)
    return float(np.sqrt(np.sum(w * (np.abs(vals) ** 2 + np.sum(np.abs(grads) ** 2, axis=-1)))))


def physical_elements(mesh: geo.Mesh, domain: Optional[geo.StripDomain]) -> np.ndarray:
    a = domain.physical_half_width if domain is not None else mesh.A
    return np.nonzero(np.abs(mesh.centroids[:, 0]) < a)[0]


def h1_norm_nodal(mesh: geo.Mesh, u: np.ndarray, domain: Optional[geo.StripDomain] = None) -> float:
    """``H^1`` norm of the nodal field over the unstretched elements (consistent mass)."""
    els = physical_elements(mesh, domain)
    kx, ky, mc, _, _ = element_matrices(mesh.corners[els])
    ue = u[mesh.triangles[els]]
    q = np.einsum("mi,mij,mj->", np.conj(ue), kx + ky + mc, ue)
    return float(np.sqrt(max(q.real, 0.0)))


def l2_error(field: ComplexFieldVector, exact: Callable, elements: Optional[np.ndarray] = None,
             kind: str = "smoothed") -> tuple[float, float]:
    """``(||u_h - u||_L2, ||u||_L2)`` by the 7-point rule."""
    mesh = field.mesh
    if elements is None:
        elements = np.arange(len(mesh.triangles))
    vals, _, w = quadrature_samples(field, elements, kind)
    qp = np.einsum("qi,mid->mqd", TRI7_BARY, mesh.corners[elements])
    ex = np.asarray(exact(qp.reshape(-1, 2))).reshape(vals.shape)
    return float(np.sqrt(np.sum(w * np.abs(vals - ex) ** 2))), float(np.sqrt(np.sum(w * np.abs(ex) ** 2)))


# --------------------------------------------------------------------------
# Angular spectrum


def _propagate(spectrum: TraceSpectrum, k_sq, distance: float, x1):
    factor = np.exp(1j * distance * branch_sqrt(complex(k_sq) - spectrum.xi**2))
    out = spectrum.multiply(factor)
    if x1 is None:
        return out.to_samples()
    return out.evaluate(x1)


def propagate_up(spectrum: TraceSpectrum, k_sq, h: float, a: float, x1=None) -> np.ndarray:
    """Continue a trace on ``x2 = h`` to ``x2 = a >= h`` (upward radiating field)."""
    if a < h:
        raise ValueError("downward continuation from the top line is ill-posed and refused")
    return _propagate(spectrum, k_sq, a - h, x1)


def propagate_down(spectrum: TraceSpectrum, k_sq, h: float, a: float, x1=None) -> np.ndarray:
    """Continue a trace on ``x2 = -h`` to ``x2 = a <= -h`` (downward radiating field)."""
    if a > -h:
        raise ValueError("upward continuation from the bottom line is ill-posed and refused")
    return _propagate(spectrum, k_sq, -h - a, x1)


def trace_spectrum(field: ComplexFieldVector, boundary: str = "top") -> TraceSpectrum:
    """Spectrum of the nodal trace on ``x2 = +-h``, reflected evenly across the walls."""
    mesh = field.mesh
    nodes = mesh.top_nodes if boundary == "top" else mesh.bottom_nodes
    return TraceSpectrum.from_samples(mirror_extend(field.coefficients[nodes]), 2.0 * mesh.A, boundary, -mesh.A)


def exterior_values(system: SystemMatrix, field: ComplexFieldVector, a: float, x1=None,
                    kind: str = "scattered") -> np.ndarray:
    """Field on the line ``x2 = a`` outside the strip.

    The nodal trace is continued with the same (possibly stretched) tangential
    operator that defines the transparent condition, then interpolated
    trigonometrically in ``x1``.
    """
    mesh = field.mesh
    if a >= mesh.h:
        nodes, k_sq, dist, boundary = mesh.top_nodes, system.k1_sq, a - mesh.h, "top"
    elif a <= -mesh.h:
        nodes, k_sq, dist, boundary = mesh.bottom_nodes, system.k2_sq, -mesh.h - a, "bottom"
    else:
        raise ValueError("target line lies inside the strip; use eval_in_strip")
    P = system.trace_ops["trace"].propagator(k_sq, dist)
    nodal = P @ field.coefficients[nodes]
    xs = mesh.vertices[nodes, 0]
    if x1 is None:
        x1 = xs
        vals = nodal
    else:
        vals = TraceSpectrum.from_samples(mirror_extend(nodal), 2.0 * mesh.A, boundary, -mesh.A).evaluate(x1)
    x1 = np.asarray(x1, float)
    if boundary == "top" and field.incident is not None and kind in ("scattered", "incident"):
        pts = np.column_stack([x1, np.full(len(x1), a)])
        inc = field.incident.exact(pts)
        return vals - inc if kind == "scattered" else inc
    return vals


def helmholtz_residual_probe(evaluator: Callable[[np.ndarray], np.ndarray], points, k_sq,
                             step: float = 1e-3) -> np.ndarray:
    """Relative fourth-order finite-difference Helmholtz residual at each point.

    Returns ``|Delta_h u + k^2 u| / (|k^2| |u|)``.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * step**2)
    offs = np.array([-2, -1, 0, 1, 2]) * step
    lap = 0.0
    for axis in range(2):
        for co, o in zip(c, offs):
            q = pts.copy()
            q[:, axis] += o
            lap = lap + co * evaluator(q)
    u = evaluator(pts)
    k_sq = complex(k_sq)
    return np.abs(lap + k_sq * u) / (abs(k_sq) * np.maximum(np.abs(u), 1e-300))


def write_field_csv(path, points, values, kind: str) -> None:
    """Write a field slice with columns ``x1, x2, re, im, kind``."""
    pts = np.atleast_2d(np.asarray(points, float))
    vals = np.asarray(values, complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "re", "im", "kind"])
        for (x, y), v in zip(pts, vals):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v.real)), repr(float(v.imag)), kind])
