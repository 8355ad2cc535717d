"""Independent reference computations used by the tests."""

import numpy as np
from scipy import integrate


def bessel_j(n, x, m=128):
    """``J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt`` by the periodic trapezoid rule."""
    t = 2 * np.pi * np.arange(m) / m
    x = np.asarray(x, complex)[..., None]
    return np.mean(np.cos(n * t - x * np.sin(t)), axis=-1)


def bessel_y(n, x):
    """Integral representation of ``Y_n`` for real ``x > 0``."""
    a = integrate.quad(lambda t: np.sin(x * np.sin(t) - n * t), 0, np.pi, epsabs=1e-15, epsrel=1e-13)[0]
    # beyond t_max the integrand is below exp(-60)
    t_max = np.arcsinh((60.0 + n * 10.0) / x) + 10.0 * n / max(x, 1.0)
    b = integrate.quad(lambda t: (np.exp(n * t) + (-1) ** n * np.exp(-n * t)) * np.exp(-x * np.sinh(t)),
                       0, t_max, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return (a - b) / np.pi


def hankel1(n, x):
    return complex(bessel_j(n, x)) + 1j * bessel_y(n, x)


def cross2(a, b):
    """z-component of the cross product of two 2-vectors."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _ray_interval(tri, theta):
    """Parameter interval ``[a, b]`` of the ray ``r (cos, sin)`` inside a convex triangle."""
    d = np.array([np.cos(theta), np.sin(theta)])
    lo, hi = 0.0, np.inf
    orient = np.sign(cross2(tri[1] - tri[0], tri[2] - tri[0]))
    for i in range(3):
        p, q = tri[i], tri[(i + 1) % 3]
        e = q - p
        nrm = orient * np.array([-e[1], e[0]])  # inward normal
        num = nrm @ p
        den = nrm @ d
        if abs(den) < 1e-300:
            if num > 0:
                return 0.0, 0.0
            continue
        r = num / den
        if den > 0:
            lo = max(lo, r)
        else:
            hi = min(hi, r)
    return lo, max(lo, hi)


def clipped_moment_oracle(tri, rho, a, b):
    """``int x^a y^b`` over ``T cap B(0, rho)`` by polar integration with adaptive quadrature in angle."""
    tri = np.asarray(tri, float)

    def inner(theta):
        r0, r1 = _ray_interval(tri, theta)
        r0, r1 = min(r0, rho), min(r1, rho)
        if r1 <= r0:
            return 0.0
        c, s = np.cos(theta), np.sin(theta)
        p = a + b + 2
        return c**a * s**b * (r1**p - r0**p) / p

    breaks = sorted({float(np.arctan2(v[1], v[0]) % (2 * np.pi)) for v in tri})
    pts = [0.0] + breaks + [2 * np.pi]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo:
            total += integrate.quad(inner, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    return total


def direct_dft(samples):
    n = len(samples)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ samples / np.sqrt(n)


def fd_laplacian(f, x, step):
    """Fourth-order central finite-difference Laplacian."""
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * step**2)
    offs = np.arange(-2, 3) * step
    x = np.asarray(x, float)
    out = 0.0
    for ax in range(2):
        e = np.zeros(2)
        e[ax] = 1.0
        out = out + sum(ci * f(x + o * e) for ci, o in zip(c, offs))
    return out
