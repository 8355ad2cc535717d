"""Dirichlet-to-Neumann maps on the horizontal truncation lines.

A trace sampled on ``n`` uniform points of a period ``[-L, L)`` is expanded
in the discrete Fourier basis ``exp(i xi_m x1)`` with ``xi_m = pi m / L``
(unitary transform).  The DtN map multiplies coefficient ``m`` by
``i sqrt(k^2 - xi_m^2)``.

The finite element solver uses these maps through :func:`dtn_galerkin_block`,
which returns the matrix of ``phi -> int psi T phi`` on the nodal trace of a
laterally reflected strip, optionally composed with a complex coordinate
stretch near the walls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .special import branch_sqrt

__all__ = [
    "frequencies",
    "TraceSpectrum",
    "DtnOperator",
    "apply_dtn",
    "dtn_bilinear",
    "sobolev_norm",
    "boundedness_constant",
    "mirror_extend",
    "dtn_galerkin_block",
    "StretchedTraceOperator",
]

log = logging.getLogger(__name__)


def _check_pow2(n: int) -> None:
    if n < 2 or n & (n - 1):
        raise ValueError(f"trace length must be a power of two, got {n}")


def frequencies(n: int, half_width: float) -> np.ndarray:
    """Discrete frequencies ``pi m / L`` in FFT order."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * half_width / n)


@dataclass(frozen=True)
class TraceSpectrum:
    """Unitary DFT coefficients of a trace on a periodic uniform grid.

    ``coefficients`` are stored in FFT order; :meth:`centered` returns the
    ordering ``m = -n/2 .. n/2 - 1``.  ``origin`` is the abscissa of the
    first sample (default ``-half_width``).
    """

    coefficients: np.ndarray
    half_width: float
    boundary: str = "top"
    origin: Optional[float] = None

    def __post_init__(self):
        _check_pow2(len(self.coefficients))
        if self.origin is None:
            object.__setattr__(self, "origin", -float(self.half_width))

    @classmethod
    def from_samples(cls, samples, half_width: float, boundary: str = "top",
                     origin: Optional[float] = None) -> "TraceSpectrum":
        samples = np.asarray(samples, dtype=complex)
        _check_pow2(len(samples))
        return cls(np.fft.fft(samples, norm="ortho"), float(half_width), boundary, origin)

    @property
    def n(self) -> int:
        return len(self.coefficients)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def grid(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    @property
    def xi(self) -> np.ndarray:
        return frequencies(self.n, self.half_width)

    def centered(self):
        return np.fft.fftshift(self.xi), np.fft.fftshift(self.coefficients)

    def to_samples(self) -> np.ndarray:
        return np.fft.ifft(self.coefficients, norm="ortho")

    def evaluate(self, x1) -> np.ndarray:
        """Trigonometric interpolant at arbitrary ``x1`` by direct summation."""
        x1 = np.asarray(x1, float)
        xi = self.xi
        phase = np.exp(1j * np.multiply.outer(x1 - self.origin, xi))
        return phase @ self.coefficients / np.sqrt(self.n)

    def multiply(self, factor) -> "TraceSpectrum":
        return TraceSpectrum(self.coefficients * factor, self.half_width, self.boundary, self.origin)


class DtnOperator:
    """Fourier multiplier ``i sqrt(k^2 - xi_m^2)`` on a periodic grid.

    For real ``k`` a grid frequency that coincides with ``k`` would give a
    zero symbol; ``k`` is then nudged by ``1e-12`` relative and a warning is
    logged.
    """

    def __init__(self, k_sq, n: int, half_width: float, boundary: str = "top"):
        _check_pow2(n)
        self.n = int(n)
        self.half_width = float(half_width)
        self.boundary = boundary
        k_sq = complex(k_sq)
        self.xi = frequencies(n, half_width)
        if k_sq.imag == 0.0 and k_sq.real > 0.0:
            gap = np.abs(k_sq.real - self.xi**2)
            if np.any(gap <= 1e-12 * k_sq.real):
                k_new = np.sqrt(k_sq.real) * (1.0 + 1e-12)
                log.warning("grid frequency collides with k; nudging k from %.17g to %.17g",
                            np.sqrt(k_sq.real), k_new)
                k_sq = complex(k_new**2)
        self.k_sq = k_sq
        self.symbol = 1j * branch_sqrt(k_sq - self.xi**2)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n


def _samples(op: DtnOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != op.n:
        raise ValueError(f"trace length {x.shape[-1]} does not match operator length {op.n}")
    return x


def apply_dtn(op: DtnOperator, trace) -> np.ndarray:
    """Apply the DtN map to grid samples (last axis)."""
    x = _samples(op, trace)
    return np.fft.ifft(op.symbol * np.fft.fft(x, axis=-1), axis=-1)


def dtn_bilinear(op: DtnOperator, phi, psi):
    """Return ``(int psi T phi, int conj(psi) T phi)`` by the grid rectangle rule."""
    tphi = apply_dtn(op, phi)
    psi = _samples(op, psi)
    dx = op.spacing
    return complex(dx * np.sum(psi * tphi)), complex(dx * np.sum(np.conj(psi) * tphi))


def sobolev_norm(samples, s: float, half_width: float) -> float:
    """Discrete ``H^s`` norm with weights ``(1 + xi^2)^s``."""
    x = np.asarray(samples, dtype=complex)
    n = x.shape[-1]
    c = np.fft.fft(x, norm="ortho")
    xi = frequencies(n, half_width)
    dx = 2.0 * half_width / n
    return float(np.sqrt(dx * np.sum((1.0 + xi**2) ** s * np.abs(c) ** 2)))


def boundedness_constant(op: DtnOperator) -> float:
    """``max_m |sigma_m| / (1 + xi_m^2)^(1/2)``, the discrete ``H^(1/2) -> H^(-1/2)`` bound."""
    return float(np.max(np.abs(op.symbol) / np.sqrt(1.0 + op.xi**2)))


def mirror_extend(nodal) -> np.ndarray:
    """Even reflection of ``N + 1`` nodal values on ``[-A, A]`` to ``2N`` periodic samples."""
    v = np.asarray(nodal)
    return np.concatenate([v, v[-2:0:-1]], axis=-1)


def _trapezoid_weights(n_int: int, dx: float) -> np.ndarray:
    w = np.full(n_int + 1, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


class StretchedTraceOperator:
    """Tangential operator of the reflected trace grid, optionally stretched.

    With ``s(x1)`` the stretching factor on the nodes, the tangential part of
    the Helmholtz operator in stretched coordinates is
    ``Q = D S^{-1} D``, where ``D`` is the spectral derivative on the
    reflected period ``4A``.  ``S^{-1} D`` is how ``d/dx1`` transforms, so
    the DtN symbol ``i sqrt(k^2 - xi^2)`` becomes the matrix function
    ``i sqrt(k^2 + Q)``.  Everything is reduced to the ``N + 1`` nodes of
    ``[-A, A]`` and symmetrised with the trapezoid weights, which makes the
    Galerkin block complex symmetric.
    """

    def __init__(self, n_int: int, A: float, stretch: Optional[np.ndarray] = None):
        _check_pow2(n_int)
        self.n_int = int(n_int)
        self.A = float(A)
        m2 = 2 * n_int
        dx = 2.0 * A / n_int
        self.dx = dx
        self.xi = frequencies(m2, 2.0 * A)
        if stretch is None:
            stretch = np.ones(n_int + 1, dtype=complex)
        stretch = np.asarray(stretch, dtype=complex)
        if stretch.shape != (n_int + 1,):
            raise ValueError("stretch must be sampled on the N + 1 trace nodes")
        self.stretch = stretch
        self.plain = bool(np.all(stretch == 1.0))
        w = _trapezoid_weights(n_int, dx)
        self.weights = w
        if self.plain:
            self._Y = None
            return
        s_full = mirror_extend(stretch)
        xi_d = self.xi.copy()
        xi_d[n_int] = 0.0
        eye = np.eye(m2)
        D = np.fft.ifft(1j * xi_d[:, None] * np.fft.fft(eye, axis=0), axis=0).real
        sign = (-1.0) ** np.arange(m2)
        Q = D @ (D / s_full[:, None]) - (self.xi[n_int] ** 2 / m2) * np.outer(sign, sign)
        # reduce to even (reflected) functions on the N + 1 nodes
        Qe = Q[: n_int + 1, : n_int + 1].copy()
        Qe[:, 1:n_int] += Q[: n_int + 1, m2 - 1 : n_int : -1]
        ws = w * stretch
        WQ = w[:, None] * Qe
        WQ = 0.5 * (WQ + WQ.T)
        r = np.sqrt(ws)
        self._r = r
        self._Y = WQ / (r[:, None] * r[None, :])

    def galerkin_block(self, k_sq) -> np.ndarray:
        """Matrix ``B`` with ``B[i, j] = int phi_i T phi_j`` on the nodal trace."""
        n = self.n_int + 1
        if self.plain:
            op = DtnOperator(k_sq, 2 * self.n_int, 2.0 * self.A)
            col = np.fft.ifft(op.symbol)
            m2 = 2 * self.n_int
            idx = np.arange(n)
            C = col[(idx[:, None] - idx[None, :]) % m2].copy()
            C[:, 1:-1] += col[(idx[:, None] + idx[None, 1:-1]) % m2]
            B = self.weights[:, None] * C
            return 0.5 * (B + B.T)
        Z = complex(k_sq) * np.eye(n) + self._Y
        F = np.exp(0.25j * np.pi) * sla.sqrtm(-1j * Z)
        F = 0.5 * (F + F.T)
        return 1j * self._r[:, None] * F * self._r[None, :]

    def propagator(self, k_sq, distance: float) -> np.ndarray:
        """Nodal map from the trace to the field ``distance`` away from the line."""
        n = self.n_int + 1
        if distance < 0:
            raise ValueError("propagation distance must be non-negative")
        if self.plain:
            op = DtnOperator(k_sq, 2 * self.n_int, 2.0 * self.A)
            col = np.fft.ifft(np.exp(distance * op.symbol))
            m2 = 2 * self.n_int
            idx = np.arange(n)
            C = col[(idx[:, None] - idx[None, :]) % m2].copy()
            C[:, 1:-1] += col[(idx[:, None] + idx[None, 1:-1]) % m2]
            return C
        Z = complex(k_sq) * np.eye(n) + self._Y
        F = np.exp(0.25j * np.pi) * sla.sqrtm(-1j * Z)
        P = sla.expm(1j * distance * F)
        return P * (self._r[None, :] / self._r[:, None])


def dtn_galerkin_block(n_int: int, A: float, k_sq, stretch: Optional[np.ndarray] = None) -> np.ndarray:
    """Galerkin DtN block on ``N + 1`` uniform nodes of ``[-A, A]`` with reflecting walls."""
    return StretchedTraceOperator(n_int, A, stretch).galerkin_block(k_sq)
