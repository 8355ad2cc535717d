"""Quadrature on triangles and exact moments over triangle/disk intersections."""

from __future__ import annotations

import numpy as np

__all__ = ["TRI7_BARY", "TRI7_WEIGHTS", "tri7_points", "gauss_legendre", "clipped_moments", "disk_moments"]

_a1, _b1 = 0.059715871789769820, 0.470142064105115090
_a2, _b2 = 0.797426985353087322, 0.101286507323456339
TRI7_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _b1, _b1], [_b1, _a1, _b1], [_b1, _b1, _a1],
    [_a2, _b2, _b2], [_b2, _a2, _b2], [_b2, _b2, _a2],
])
TRI7_WEIGHTS = np.array([0.225] + [0.132394152788506181] * 3 + [0.125939180544827153] * 3)


def tri7_points(corners: np.ndarray) -> np.ndarray:
    """Quadrature points of the 7-point degree-5 rule, shape ``(m, 7, 2)``."""
    return np.einsum("qi,mid->mqd", TRI7_BARY, corners)


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


# monomial exponents (a, b) for x^a y^b up to degree 2
MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
_GL_SEG = np.polynomial.legendre.leggauss(4)
_GL_ARC = np.polynomial.legendre.leggauss(20)


def _segment_terms(p0, p1, t0, t1):
    x, w = _GL_SEG
    tau = 0.5 * (t1 - t0) * x + 0.5 * (t0 + t1)
    w = 0.5 * (t1 - t0) * w
    px = p0[0] + tau * (p1[0] - p0[0])
    py = p0[1] + tau * (p1[1] - p0[1])
    dy = p1[1] - p0[1]
    return np.array([np.sum(w * px ** (a + 1) * py**b) * dy / (a + 1) for a, b in MONOMIALS])


def _arc_terms(rho, th0, th1):
    out = np.zeros(len(MONOMIALS))
    n = max(1, int(np.ceil((th1 - th0) / (0.5 * np.pi))))
    edges = np.linspace(th0, th1, n + 1)
    x, w = _GL_ARC
    for a0, a1 in zip(edges[:-1], edges[1:]):
        th = 0.5 * (a1 - a0) * x + 0.5 * (a0 + a1)
        ww = 0.5 * (a1 - a0) * w
        cx, cy = rho * np.cos(th), rho * np.sin(th)
        dy = rho * np.cos(th)
        out += np.array([np.sum(ww * cx ** (a + 1) * cy**b * dy) / (a + 1) for a, b in MONOMIALS])
    return out


def _inside_tri(tri, p, tol=1e-14):
    a, b, c = tri
    def cross(u, v, q):
        return (v[0] - u[0]) * (q[1] - u[1]) - (v[1] - u[1]) * (q[0] - u[0])
    return cross(a, b, p) >= -tol and cross(b, c, p) >= -tol and cross(c, a, p) >= -tol


def _cut_moments(tri, rho):
    """Moments over ``tri`` (CCW, disk-centred coordinates) intersected with ``|x| < rho``."""
    total = np.zeros(len(MONOMIALS))
    angles = []
    for i in range(3):
        p0, p1 = tri[i], tri[(i + 1) % 3]
        d = p1 - p0
        qa = d @ d
        qb = 2.0 * (p0 @ d)
        qc = p0 @ p0 - rho * rho
        disc = qb * qb - 4.0 * qa * qc
        if disc <= 0.0:
            continue
        sq = np.sqrt(disc)
        r0, r1 = (-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)
        t0, t1 = max(r0, 0.0), min(r1, 1.0)
        if t1 > t0:
            total += _segment_terms(p0, p1, t0, t1)
        for r in (r0, r1):
            if 0.0 <= r <= 1.0:
                q = p0 + r * d
                angles.append(np.arctan2(q[1], q[0]))
    if not angles:
        if _inside_tri(tri, np.array([rho, 0.0])):
            total += _arc_terms(rho, 0.0, 2.0 * np.pi)
        return total
    angles = np.sort(np.mod(np.array(angles), 2.0 * np.pi))
    angles = np.concatenate([angles, [angles[0] + 2.0 * np.pi]])
    for a0, a1 in zip(angles[:-1], angles[1:]):
        if a1 - a0 <= 1e-15:
            continue
        mid = 0.5 * (a0 + a1)
        if _inside_tri(tri, rho * np.array([np.cos(mid), np.sin(mid)])):
            total += _arc_terms(rho, a0, a1)
    return total


def _triangle_moments(p):
    """Exact degree-2 monomial moments of whole triangles, ``p`` of shape (m, 3, 2)."""
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    # degree-2 exact rule: edge midpoints
    mids = 0.5 * (p + np.roll(p, -1, axis=1))
    out = np.empty((len(p), len(MONOMIALS)))
    for k, (a, b) in enumerate(MONOMIALS):
        out[:, k] = area * np.mean(mids[..., 0] ** a * mids[..., 1] ** b, axis=1)
    return out


def clipped_moments(corners: np.ndarray, center, rho: float):
    """Moments ``int x^a y^b`` over ``T cap B(center, rho)``, coordinates relative to ``center``.

    Returns ``(idx, moments)`` listing only triangles that meet the disk.
    Monomial order is ``1, x, y, x^2, xy, y^2``.
    """
    p = np.asarray(corners, float) - np.asarray(center, float)
    r2 = np.sum(p**2, axis=-1)
    inside = r2 < rho * rho
    n_in = inside.sum(axis=1)
    # distance from disk centre to each triangle
    dist = np.full(len(p), np.inf)
    for i in range(3):
        a, b = p[:, i], p[:, (i + 1) % 3]
        d = b - a
        t = np.clip(-np.sum(a * d, axis=1) / np.maximum(np.sum(d * d, axis=1), 1e-300), 0.0, 1.0)
        q = a + t[:, None] * d
        dist = np.minimum(dist, np.hypot(q[:, 0], q[:, 1]))
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    cr = lambda u, v: u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    s0 = cr(p[:, 1] - p[:, 0], -p[:, 0])
    s1 = cr(p[:, 2] - p[:, 1], -p[:, 1])
    s2 = cr(p[:, 0] - p[:, 2], -p[:, 2])
    contains_c = ((s0 >= 0) & (s1 >= 0) & (s2 >= 0)) | ((s0 <= 0) & (s1 <= 0) & (s2 <= 0))
    dist[contains_c] = 0.0
    full = n_in == 3
    cut = (~full) & (dist < rho)
    idx_full = np.nonzero(full)[0]
    idx_cut = np.nonzero(cut)[0]
    mom_full = _triangle_moments(p[idx_full])
    mom_cut = np.empty((len(idx_cut), len(MONOMIALS)))
    for n, t in enumerate(idx_cut):
        tri = p[t]
        if cr(e1[t : t + 1], e2[t : t + 1])[0] < 0:
            tri = tri[[0, 2, 1]]
        mom_cut[n] = _cut_moments(tri, rho)
    idx = np.concatenate([idx_full, idx_cut])
    mom = np.vstack([mom_full, mom_cut])
    order = np.argsort(idx, kind="stable")
    return idx[order], mom[order]


def disk_moments(rho: float) -> np.ndarray:
    """Exact moments of the full disk of radius ``rho`` centred at the origin."""
    a = np.pi * rho**2
    s = np.pi * rho**4 / 4.0
    return np.array([a, 0.0, 0.0, s, 0.0, s])
