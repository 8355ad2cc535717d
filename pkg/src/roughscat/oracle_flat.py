"""Semi-analytic field of a point source above a flat two-layer interface.

Above the interface ``x2 = 0`` the total field is the free-space field of the
source plus a reflected spectrum; below it a transmitted spectrum:

    u_refl(x)  = (i / 4 pi) int R(xi) exp(i xi dx1) exp(i g1 (x2 + z2)) / g1 dxi
    u_trans(x) = (i / 4 pi) int T(xi) exp(i xi dx1) exp(i g1 z2 - i g2 x2) / g1 dxi

with ``g_j = sqrt(k_j^2 - xi^2)`` (branch with non-negative imaginary part),
``R = (g1 - g2)/(g1 + g2)`` and ``T = 1 + R``.  The integrand is even in
``xi``.  On ``[0, k1]`` the substitution ``xi = k1 sin t`` and on
``[k1, inf)`` the substitution ``xi = k1 cosh s`` remove the ``1/g1``
singularity; the square-root kink at ``xi = Re k2`` is handled by a
quadratic change of variables clustered at the kink.  Each piece is then
integrated with composite Gauss-Legendre panels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .special import branch_sqrt, fundamental_solution, halfplane_green, wavenumber

__all__ = ["TwoLayerReference", "reflection_transmission", "reference_field"]


def reflection_transmission(xi, k1_sq, k2_sq):
    """Per-frequency coefficients ``(R, T, g1, g2)`` of the flat interface."""
    xi = np.asarray(xi, dtype=complex)
    g1 = branch_sqrt(complex(k1_sq) - xi**2)
    g2 = branch_sqrt(complex(k2_sq) - xi**2)
    R = (g1 - g2) / (g1 + g2)
    return R, 1.0 + R, g1, g2


@dataclass(frozen=True)
class TwoLayerReference:
    """Configuration of the flat two-layer reference.

    Attributes
    ----------
    k1_sq, k2_sq : complex
    source : tuple
        Source position, ``source[1] > 0``.
    panels : int
        Panels per unit of the base density on each integration piece;
        doubling it is the convergence check.
    order : int
        Gauss-Legendre points per panel.
    tail : float
        Evanescent decay (in e-folds) at which the spectral tail is cut.
    """

    k1_sq: complex
    k2_sq: complex
    source: tuple
    panels: int = 8
    order: int = 16
    tail: float = 36.0

    def __post_init__(self):
        if self.source[1] <= 0:
            raise ValueError("the reference source must lie above the interface")


def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def _panels(a, b, n, order, cluster=None):
    """Nodes/weights on ``[a, b]``; ``cluster`` in ``{a, b}`` applies a quadratic map."""
    x, w = _gl(order)
    edges = np.linspace(0.0, 1.0, n + 1)
    v = (0.5 * (edges[1:] - edges[:-1])[:, None] * (x[None, :] + 1.0) + edges[:-1, None]).ravel()
    wv = (0.5 * (edges[1:] - edges[:-1])[:, None] * w[None, :]).ravel()
    if cluster is None:
        return a + (b - a) * v, (b - a) * wv
    p, q = (a, b) if cluster == a else (b, a)
    # t = p + (q - p) v^2, dt = 2 (q - p) v dv
    t = p + (q - p) * v**2
    wt = 2.0 * abs(q - p) * v * wv
    return t, wt


def _nodes(ref: TwoLayerReference, height: float, spread: float):
    """Quadrature in ``xi`` over ``[0, inf)`` with weights of ``dxi / g1``.

    ``height`` is the decay distance (``x2 + z2`` above, ``z2 - x2`` below)
    and ``spread`` the largest ``|x1 - z1|`` to be evaluated.
    """
    k1 = wavenumber(ref.k1_sq).real
    k2r = wavenumber(ref.k2_sq).real
    n0, order = ref.panels, ref.order
    osc = 1 + int(np.ceil(k1 * spread / np.pi))
    xis, ws = [], []
    # propagating part, xi = k1 sin t, dxi / g1 = dt
    t_kink = np.arcsin(k2r / k1) if k2r < k1 else None
    pieces = [(0.0, t_kink, t_kink), (t_kink, 0.5 * np.pi, t_kink)] if t_kink else [(0.0, 0.5 * np.pi, None)]
    for a, b, cl in pieces:
        n = max(2, int(np.ceil(n0 * osc * (b - a) / (0.5 * np.pi))))
        t, w = _panels(a, b, n, order, cluster=cl)
        xis.append(k1 * np.sin(t) + 0j)
        ws.append(w + 0j)
    # evanescent part, xi = k1 cosh s, dxi / g1 = -i ds
    s_max = np.arcsinh(ref.tail / (k1 * max(height, 1e-3)))
    s_kink = np.arccosh(k2r / k1) if k2r > k1 else None
    if s_kink is not None and s_kink >= s_max:
        s_max = 1.5 * s_kink
    pieces = [(0.0, s_kink, s_kink), (s_kink, s_max, s_kink)] if s_kink else [(0.0, s_max, None)]
    for a, b, cl in pieces:
        freq = k1 * np.sinh(b) * spread + k1 * np.cosh(b) * 0.0
        n = max(2, int(np.ceil(n0 * (b - a) * (1.0 + freq / np.pi) + n0)))
        s, w = _panels(a, b, n, order, cluster=cl)
        xis.append(k1 * np.cosh(s) + 0j)
        ws.append(-1j * w)
    return np.concatenate(xis), np.concatenate(ws)


def reference_field(ref: TwoLayerReference, x, kind: str = "scattered") -> np.ndarray:
    """Reference field at points ``x`` (shape ``(..., 2)``).

    ``kind`` is ``"total"`` or ``"scattered"``.  The scattered field is the
    total field minus the half-plane incident field above the interface and
    the total field below it, matching the solver's convention.
    """
    if kind not in ("total", "scattered"):
        raise ValueError("kind must be 'total' or 'scattered'")
    x = np.asarray(x, float)
    shape = x.shape[:-1]
    pts = x.reshape(-1, 2)
    z = np.asarray(ref.source, float)
    if np.any(np.hypot(*(pts - z).T) == 0):
        raise ValueError("evaluation point coincides with the source")
    k1 = wavenumber(ref.k1_sq)
    out = np.empty(len(pts), dtype=complex)
    up = pts[:, 1] >= 0.0
    for mask, upper in ((up, True), (~up, False)):
        if not np.any(mask):
            continue
        p = pts[mask]
        dx = np.abs(p[:, 0] - z[0])
        height = float(np.min(p[:, 1] + z[1])) if upper else float(np.min(z[1] - p[:, 1]))
        if height <= 0:
            raise ValueError("reference field is not defined for points mirroring the source onto the interface")
        xi, w = _nodes(ref, height, float(dx.max()))
        R, T, g1, g2 = reflection_transmission(xi, ref.k1_sq, ref.k2_sq)
        cosx = np.cos(np.outer(dx, xi.real))
        if upper:
            amp = np.exp(1j * np.outer(p[:, 1] + z[1], g1))
            spec = (R if kind == "total" else T) * w
            vals = (0.5j / np.pi) * np.sum(cosx * amp * spec, axis=1)
            if kind == "total":
                vals = vals + fundamental_solution(k1, p, z)
        else:
            amp = np.exp(1j * z[1] * g1)[None, :] * np.exp(-1j * np.outer(p[:, 1], g2))
            vals = (0.5j / np.pi) * np.sum(cosx * amp * (T * w), axis=1)
        out[mask] = vals
    return out.reshape(shape)
