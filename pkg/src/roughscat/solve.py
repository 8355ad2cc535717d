"""Regime validation, direct solves and the discrete energy balance."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .assembly import RhsVector, SystemMatrix, apply_absorbing_shift

__all__ = [
    "Regime",
    "RegimeError",
    "SolverError",
    "WaveNumbers",
    "validate_regime",
    "EnergyBalance",
    "energy_balance",
    "SolveReport",
    "Factorization",
    "factorize",
    "solve_system",
    "absorbing_shift_solve",
    "ENERGY_TOL",
]

log = logging.getLogger(__name__)

#: relative tolerance of the discrete imaginary-part identity checked on every solve
ENERGY_TOL = 1e-10


class Regime(str, Enum):
    LOSSY_LOWER = "LossyLower"
    REAL_CONTRAST = "RealContrast"
    HOMOGENEOUS = "Homogeneous"


class RegimeError(ValueError):
    """Wavenumbers or boundary conditions outside the admissible regimes."""


class SolverError(RuntimeError):
    """Factorization breakdown or tolerance failure."""


@dataclass(frozen=True)
class WaveNumbers:
    """Squared wavenumbers above (``k1_sq``) and below (``k2_sq``) the interface."""

    k1_sq: complex
    k2_sq: complex

    def __post_init__(self):
        object.__setattr__(self, "k1_sq", complex(self.k1_sq))
        object.__setattr__(self, "k2_sq", complex(self.k2_sq))

    @property
    def regime(self) -> Regime:
        if self.k2_sq.imag > 0:
            return Regime.LOSSY_LOWER
        if self.k1_sq == self.k2_sq:
            return Regime.HOMOGENEOUS
        return Regime.REAL_CONTRAST


def validate_regime(wn: WaveNumbers, obstacle=None) -> Regime:
    """Check the wavenumbers and obstacle against the admissible regimes.

    Both media need positive real parts, ``Im k1^2 = 0``, ``Im k2^2 >= 0`` and
    ``k1^2 != Re k2^2``.  With a lossless lower medium an obstacle must carry
    a coated part of positive length with positive impedance.  Equal
    wavenumbers without obstacle (a homogeneous plane) are accepted as
    :attr:`Regime.HOMOGENEOUS`.
    """
    k1, k2 = wn.k1_sq, wn.k2_sq
    if k1.imag != 0 or k1.real <= 0:
        raise RegimeError(f"k1^2 must be real and positive, got {k1}")
    if k2.imag < 0:
        raise RegimeError(f"Im k2^2 must be non-negative, got {k2.imag}")
    if k2.real <= 0:
        raise RegimeError(f"Re k2^2 must be positive, got {k2.real}")
    regime = wn.regime
    if regime is Regime.HOMOGENEOUS:
        if obstacle is not None:
            raise RegimeError("equal wavenumbers are only admitted without an obstacle")
        return regime
    if k1.real == k2.real:
        raise RegimeError("non-trap condition violated: k1^2 equals Re k2^2")
    if regime is Regime.LOSSY_LOWER or obstacle is None:
        return regime
    t = np.linspace(0.0, 1.0, 4096, endpoint=False)
    coated = obstacle.is_coated(t)
    if obstacle.coated_measure() <= 0 or np.any(obstacle.beta(t)[coated] <= 0):
        raise RegimeError(
            "lossless lower medium with an obstacle requires a coated part of positive length "
            "with beta > 0; for purely sound-soft or sound-hard obstacles uniqueness is not known")
    return regime


@dataclass(frozen=True)
class EnergyBalance:
    """Terms of the imaginary part of ``conj(u)^T M u = conj(u)^T b``.

    ``absorption + layer + shift + top + bottom + impedance = source`` where
    ``absorption = -Im conj(u)^T V u`` over the unstretched elements (equal to
    ``Im k2^2 int_lower |u|^2``), ``layer`` is the same quantity over the
    stretched elements, ``shift = alpha int_(D' \\ D) |u|^2``,
    ``top = Im conj(u)^T B_top u``, ``bottom`` likewise,
    ``impedance = int beta |u|^2`` and ``source = Im int g conj(u)``.
    """

    absorption: float
    layer: float
    shift: float
    top: float
    bottom: float
    impedance: float
    source: float
    defect: float


def _quad(A, u):
    return complex(np.vdot(u, A @ u))


def energy_balance(system: SystemMatrix, u: np.ndarray, b: np.ndarray) -> EnergyBalance:
    """Evaluate the discrete energy identity for a solution over the free nodes."""
    p = system.parts
    absorption = -_quad(p["volume"], u).imag
    layer = -_quad(p["layer"], u).imag
    shift = -_quad(p["shift"], u).imag if "shift" in p else 0.0
    top = _quad(p["dtn_top"], u).imag
    bottom = _quad(p["dtn_bottom"], u).imag
    imp = _quad(p["impedance"], u).real
    ub = complex(np.vdot(u, b))
    source = -ub.imag
    lhs = absorption + layer + shift + top + bottom + imp
    scale = max(abs(ub), abs(absorption), abs(layer), abs(shift), abs(top), abs(bottom), abs(imp))
    defect = abs(lhs - source) / scale if scale > 0 else 0.0
    return EnergyBalance(absorption, layer, shift, top, bottom, imp, source, defect)


@dataclass
class SolveReport:
    """Outcome of one solve.

    Attributes
    ----------
    solution : ComplexFieldVector
        Nodal field over the full mesh (zero on the sound-soft boundary).
    residual : float
        ``||M u - b|| / ||b||``.
    energy : EnergyBalance
    estimate_ratio : float
        ``||u||_{H^1} / ||g||_{L^2}`` over the unstretched region.
    """

    solution: object
    residual: float
    energy: EnergyBalance
    estimate_ratio: float
    regime: str

    @property
    def energy_defect(self) -> float:
        return self.energy.defect

    def to_log(self) -> str:
        return json.dumps({
            "residual": self.residual,
            "energy": asdict(self.energy),
            "estimate_ratio": self.estimate_ratio,
            "regime": self.regime,
        }, sort_keys=True)


class Factorization:
    """Sparse LU factorization of a :class:`SystemMatrix` reused across right-hand sides."""

    def __init__(self, system: SystemMatrix, permc_spec: str = "COLAMD", tol: float = 1e-10):
        self.system = system
        self.tol = float(tol)
        try:
            self.lu = splu(system.matrix.tocsc(), permc_spec=permc_spec)
        except RuntimeError as exc:
            regime = WaveNumbers(system.k1_sq, system.k2_sq).regime.value
            raise SolverError(f"factorization failed ({exc}); regime {regime}") from exc

    def solve_free(self, b: np.ndarray) -> tuple[np.ndarray, float]:
        M = self.system.matrix
        u = self.lu.solve(b)
        nb = np.linalg.norm(b)
        if nb == 0:
            return np.zeros_like(b), 0.0
        r = b - M @ u
        res = np.linalg.norm(r) / nb
        if res > self.tol:
            u = u + self.lu.solve(r)
            res = np.linalg.norm(b - M @ u) / nb
        if not np.isfinite(res) or res > self.tol:
            raise SolverError(f"relative residual {res:.3e} exceeds tolerance {self.tol:.1e}")
        return u, float(res)

    def solve(self, rhs: RhsVector) -> SolveReport:
        from .fields import ComplexFieldVector, h1_norm_nodal

        sysm = self.system
        b = sysm.restrict(rhs.values)
        u, res = self.solve_free(b)
        bal = energy_balance(sysm, u, b)
        if bal.defect > ENERGY_TOL:
            raise SolverError(f"energy identity defect {bal.defect:.3e} exceeds {ENERGY_TOL:.0e}")
        full = sysm.expand(u)
        field = ComplexFieldVector(full, sysm.mesh, "total-smoothed", rhs.incident, sysm.domain)
        gn = rhs.g_l2_norm
        ratio = h1_norm_nodal(sysm.mesh, full, sysm.domain) / gn if gn and np.isfinite(gn) and gn > 0 else float("nan")
        regime = WaveNumbers(sysm.k1_sq, sysm.k2_sq).regime.value
        report = SolveReport(field, res, bal, float(ratio), regime)
        log.debug("solve: %s", report.to_log())
        return report


def factorize(system: SystemMatrix, permc_spec: str = "COLAMD", tol: float = 1e-10) -> Factorization:
    return Factorization(system, permc_spec, tol)


def solve_system(system: SystemMatrix, rhs: RhsVector, tol: float = 1e-10,
                 permc_spec: str = "COLAMD") -> SolveReport:
    """Factorize and solve once; see :class:`Factorization` for repeated solves."""
    return Factorization(system, permc_spec, tol).solve(rhs)


def absorbing_shift_solve(system: SystemMatrix, rhs: RhsVector, alpha: float,
                          thickness: Optional[float] = None, tol: float = 1e-10) -> SolveReport:
    """Solve with ``k2^2 + i alpha`` on the layer ``D' \\ D`` around the obstacle."""
    if system.domain.obstacle is None:
        raise RegimeError("the absorbing shift needs an obstacle")
    if WaveNumbers(system.k1_sq, system.k2_sq).regime is not Regime.REAL_CONTRAST:
        raise RegimeError("the absorbing shift is defined for the lossless-lower regime")
    return solve_system(apply_absorbing_shift(system, alpha, thickness), rhs, tol)
