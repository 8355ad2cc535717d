"""Finite-element solver for time-harmonic scattering by a rough two-layer interface
with an embedded obstacle, driven by point and dipole point sources."""

from .geometry import (SceneConfig, StripDomain, build_scene, generate_mesh, make_domain,
                       make_interface, make_obstacle)
from .special import PointSource, SourceKind
from .assembly import DiskIndicator, LocalSource, assemble_system, rhs_local_source, rhs_point_source
from .solve import (Factorization, Regime, RegimeError, SolverError, WaveNumbers, solve_system,
                    validate_regime)
from .fields import eval_in_strip
from .oracle_flat import TwoLayerReference, reference_field
from .experiments import Scene

__version__ = "0.1.0"

__all__ = [
    "SceneConfig", "StripDomain", "build_scene", "generate_mesh", "make_domain", "make_interface",
    "make_obstacle", "PointSource", "SourceKind", "DiskIndicator", "LocalSource", "assemble_system",
    "rhs_local_source", "rhs_point_source", "Factorization", "Regime", "RegimeError", "SolverError",
    "WaveNumbers", "solve_system", "validate_regime", "eval_in_strip", "TwoLayerReference",
    "reference_field", "Scene",
]
