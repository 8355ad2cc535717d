"""Special functions and half-plane Green's functions.

Bessel and Hankel functions of orders 0 and 1 come from ``scipy.special``.
Everything defined on top of them (the branch of the square root, the
fundamental solution, the image Green's function, its dipole derivative and
the smooth patches used to regularise point sources) lives here.

Points are passed as arrays whose last axis has length 2, so every function
broadcasts over arbitrary batches of evaluation points.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as sp

__all__ = [
    "branch_sqrt",
    "wavenumber",
    "fundamental_solution",
    "fundamental_solution_grad",
    "halfplane_green",
    "halfplane_green_grad",
    "hspsw_field",
    "hspsw_grad",
    "SourceKind",
    "PointSource",
    "psw_patch_coefficients",
    "hspsw_patch_coefficients",
]


def branch_sqrt(z):
    """Square root with non-negative imaginary part.

    ``sqrt(z) = sgn(Im z) sqrt((|z| + Re z)/2) + i sqrt((|z| - Re z)/2)`` with
    ``sgn(0) = +1``.  On the closed upper half-plane this is the root whose
    cut lies on the negative imaginary axis; for ``Im z < 0`` the formula keeps
    ``Im sqrt(z) >= 0`` and therefore jumps across the positive real axis.
    The smaller component is formed as ``|Im z| / (2 p)`` from the larger one
    ``p`` to avoid cancellation.

    Parameters
    ----------
    z : complex or array_like of complex

    Returns
    -------
    complex or ndarray
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    sgn = np.where(z.imag >= 0.0, 1.0, -1.0)
    big = np.sqrt((r + np.abs(z.real)) / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big > 0, np.abs(z.imag) / (2.0 * big), 0.0)
    pos = z.real >= 0.0
    re = sgn * np.where(pos, big, small)
    im = np.where(pos, small, big)
    out = re + 1j * im
    return out[()] if out.ndim == 0 else out


def wavenumber(k_sq) -> complex:
    """Wavenumber ``k`` from ``k**2`` on the branch with ``Im k >= 0``."""
    return complex(branch_sqrt(k_sq))


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("points must have a trailing axis of length 2")
    return x


def _separation(x, z):
    d = _points(x) - _points(z)
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0.0):
        raise ValueError("evaluation point coincides with the source point")
    return d, r


def _image(z):
    z = _points(z).copy()
    z[..., 1] = -z[..., 1]
    return z


def fundamental_solution(k, x, z):
    """Free-space fundamental solution ``(i/4) H0(k |x - z|)``."""
    _, r = _separation(x, z)
    return 0.25j * sp.hankel1(0, k * r)


def fundamental_solution_grad(k, x, z):
    """Gradient in ``x`` of the fundamental solution, shape ``(..., 2)``."""
    d, r = _separation(x, z)
    rad = -0.25j * k * sp.hankel1(1, k * r) / r
    return rad[..., None] * d


def _fundamental_hessian(k, x, z):
    # d_i d_j Phi = -(ik/4) [k H0 d_i d_j / r^2 + H1 (delta_ij / r - 2 d_i d_j / r^3)]
    d, r = _separation(x, z)
    kr = k * r
    h0 = sp.hankel1(0, kr)
    h1 = sp.hankel1(1, kr)
    outer = d[..., :, None] * d[..., None, :]
    eye = np.eye(2)
    a = (k * h0 / r**2 - 2.0 * h1 / r**3)[..., None, None]
    b = (h1 / r)[..., None, None]
    return -0.25j * k * (a * outer + b * eye)


def halfplane_green(k, x, z):
    """Dirichlet Green's function of the upper half-plane.

    ``G(x; z) = Phi(x; z) - Phi(x; z')`` with ``z' = (z1, -z2)``.  The image
    term is evaluated wherever ``x`` is, so the function may also be sampled
    below the line ``x2 = 0`` as long as ``x`` avoids ``z'``.
    """
    return fundamental_solution(k, x, z) - fundamental_solution(k, x, _image(z))


def halfplane_green_grad(k, x, z):
    """Gradient in ``x`` of :func:`halfplane_green`."""
    return fundamental_solution_grad(k, x, z) - fundamental_solution_grad(k, x, _image(z))


def hspsw_field(k, x, z):
    """Hyper-singular point source wave ``dG(x; z)/dx1``."""
    return halfplane_green_grad(k, x, z)[..., 0]


def hspsw_grad(k, x, z):
    """Gradient in ``x`` of :func:`hspsw_field`."""
    return _fundamental_hessian(k, x, z)[..., 0, :] - _fundamental_hessian(k, x, _image(z))[..., 0, :]


class SourceKind(str, Enum):
    PSW = "psw"
    HSPSW = "hspsw"


@dataclass(frozen=True)
class PointSource:
    """Point source in the upper medium.

    Attributes
    ----------
    position : tuple of float
        Source location ``z``.
    kind : SourceKind
        ``PSW`` radiates ``G(.; z)``, ``HSPSW`` radiates ``dG(.; z)/dx1``.
    k_sq : complex
        Squared wavenumber of the medium containing the source.
    """

    position: tuple[float, float]
    kind: SourceKind = SourceKind.PSW
    k_sq: complex = 4.0

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "kind", SourceKind(self.kind))
        if self.position[1] <= 0.0:
            raise ValueError("point sources must lie in the open upper half-plane")

    @property
    def k(self) -> complex:
        return wavenumber(self.k_sq)

    @property
    def image(self) -> tuple[float, float]:
        return (self.position[0], -self.position[1])

    def field(self, x):
        """Unregularised incident field at ``x``."""
        if self.kind is SourceKind.PSW:
            return halfplane_green(self.k, x, self.position)
        return hspsw_field(self.k, x, self.position)

    def gradient(self, x):
        if self.kind is SourceKind.PSW:
            return halfplane_green_grad(self.k, x, self.position)
        return hspsw_grad(self.k, x, self.position)


def psw_patch_coefficients(k, delta):
    """Coefficients of the regular patch ``A + B J0(k r)`` for ``(i/4) H0(k r)``.

    Value and radial derivative agree with the singular profile at
    ``r = delta``.
    """
    kd = k * delta
    b = 0.25j * sp.hankel1(1, kd) / sp.jv(1, kd)
    a = 0.25j * sp.hankel1(0, kd) - b * sp.jv(0, kd)
    return complex(a), complex(b)


def hspsw_patch_coefficients(k, delta):
    """Coefficients of ``(C J1(k r) + D k r) cos(theta)`` for the dipole profile.

    The radial profile being matched is ``-(ik/4) H1(k r)``; value and radial
    derivative agree at ``r = delta``.
    """
    kd = k * delta
    s_val = -0.25j * k * sp.hankel1(1, kd)
    s_der = -0.25j * k * k * sp.h1vp(1, kd)
    mat = np.array([[sp.jv(1, kd), kd], [k * sp.jvp(1, kd), k]], dtype=complex)
    c, d = np.linalg.solve(mat, np.array([s_val, s_der], dtype=complex))
    return complex(c), complex(d)
