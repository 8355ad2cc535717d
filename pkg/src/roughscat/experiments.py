"""Experiment drivers: reciprocity, source-derivative consistency, source approach,
multistatic datasets and convergence studies."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from .assembly import (DiskIndicator, LocalSource, assemble_system, default_delta, rhs_local_source,
                       rhs_point_source)
from .fields import (ComplexFieldVector, eval_in_strip, h1_norm, l2_error, physical_elements)
from .oracle_flat import TwoLayerReference, reference_field
from .solve import Factorization, SolveReport, WaveNumbers, validate_regime
from .special import PointSource, SourceKind, hspsw_field, hspsw_grad, wavenumber

__all__ = [
    "Scene",
    "standard_scene_config",
    "flat_scene_config",
    "ReciprocityResult",
    "run_reciprocity",
    "random_upper_points",
    "random_pairs",
    "HspswResult",
    "run_hspsw_consistency",
    "ApproachResult",
    "run_source_approach",
    "monotone_growth",
    "MeasurementGeometry",
    "ScatteringDataset",
    "generate_dataset",
    "ConvergenceReport",
    "run_convergence",
    "observed_orders",
    "mms_solution",
    "flat_validation",
]

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Scene


class Scene:
    """Domain, mesh, system and reusable factorization for one configuration.

    Parameters
    ----------
    config : SceneConfig
    h_mesh : float, optional
        Overrides ``config.h_mesh``.
    points : array_like, optional
        Points embedded as mesh vertices (sources, receivers).
    size : callable, optional
        Local mesh size for graded meshes.
    """

    def __init__(self, config: geo.SceneConfig, h_mesh: Optional[float] = None, points=None,
                 size=None, tol: float = 1e-10, check_regime: bool = True):
        self.config = config
        self.domain = geo.build_scene(config)
        self.wavenumbers = WaveNumbers(config.k1_sq, config.k2_sq)
        if check_regime:
            self.regime = validate_regime(self.wavenumbers, self.domain.obstacle)
        self.h_mesh = float(h_mesh if h_mesh is not None else config.h_mesh)
        lam = min(2.0 * np.pi / wavenumber(k).real for k in (config.k1_sq, config.k2_sq))
        if self.h_mesh > lam / 10.0:
            log.warning("h_mesh=%.3g is coarser than a tenth of the shortest wavelength (%.3g)",
                        self.h_mesh, lam / 10.0)
        self.mesh = geo.generate_mesh(self.domain, self.h_mesh, points=points, size=size)
        self.system = assemble_system(self.mesh, self.domain, config.k1_sq, config.k2_sq,
                                      check_regime=check_regime)
        self.tol = tol
        self._fact: Optional[Factorization] = None

    @property
    def factorization(self) -> Factorization:
        if self._fact is None:
            self._fact = Factorization(self.system, tol=self.tol)
        return self._fact

    @property
    def k1_sq(self) -> complex:
        return self.config.k1_sq

    def point_source(self, z, kind: str = "psw", delta: Optional[float] = None) -> SolveReport:
        src = PointSource(tuple(z), SourceKind(kind), self.config.k1_sq)
        rhs = rhs_point_source(self.mesh, self.domain, src, delta)
        return self.factorization.solve(rhs)

    def local_source(self, g) -> SolveReport:
        return self.factorization.solve(rhs_local_source(self.mesh, self.domain, g))


def standard_scene_config(h_mesh: float = np.pi / 15.0, **overrides) -> geo.SceneConfig:
    """Rough interface with a fully coated disk below it (the standard test scene)."""
    data = {
        "profile": {"family": "sinusoidal", "params": {"amplitude": 0.3, "wavenumber": 1.0, "window": 8.0}},
        "obstacle": {"curve": "circle", "params": {"center": [0.0, -1.2], "radius": 0.4},
                     "partition": [{"start": 0.0, "end": 1.0, "label": "coated"}], "beta": 1.0},
        "h": 2.0,
        "A": 8.0,
        "k1_sq": {"re": 4.0, "im": 0.0},
        "k2_sq": {"re": 2.0, "im": 0.0},
        "h_mesh": h_mesh,
    }
    data.update(overrides)
    return geo.SceneConfig.from_dict(data)


def flat_scene_config(k2_sq=2.0, h_mesh: float = np.pi / 15.0, A: float = 16.0, **overrides) -> geo.SceneConfig:
    """Flat interface without obstacle."""
    data = {
        "profile": {"family": "flat", "params": {}},
        "obstacle": None,
        "h": 2.0,
        "A": A,
        "k1_sq": {"re": 4.0, "im": 0.0},
        "k2_sq": {"re": float(np.real(k2_sq)), "im": float(np.imag(k2_sq))},
        "h_mesh": h_mesh,
    }
    data.update(overrides)
    return geo.SceneConfig.from_dict(data)


# --------------------------------------------------------------------------
# Flat validation


def flat_validation(k2_sq, h_mesh: float, A: float = 16.0, source=(0.0, 1.0), c: float = 1.5,
                    n_rcv: int = 65, delta: Optional[float] = None):
    """Relative L2 error of the receiver-line scattered field against the flat oracle."""
    cfg = flat_scene_config(k2_sq, h_mesh, A)
    half = 0.5 * A
    rcv = np.column_stack([np.linspace(-half, half, n_rcv), np.full(n_rcv, c)])
    scene = Scene(cfg, points=rcv)
    rep = scene.point_source(source, "psw", delta)
    u = eval_in_strip(rep.solution, rcv, "scattered")
    ref = reference_field(TwoLayerReference(cfg.k1_sq, cfg.k2_sq, tuple(source)), rcv, "scattered")
    err = float(np.linalg.norm(u - ref) / np.linalg.norm(ref))
    return err, rep, u, ref


# --------------------------------------------------------------------------
# Reciprocity


@dataclass
class ReciprocityResult:
    rows: list
    max_defect: float


def random_upper_points(domain: geo.StripDomain, n: int, rng: np.random.Generator, margin: float = 0.3,
                        half_width: Optional[float] = None, max_tries: int = 10000,
                        top_margin: Optional[float] = None) -> np.ndarray:
    """Random points above the interface.

    ``margin`` is the clearance to the interface and ``top_margin`` (default
    ``margin``) the clearance to the top line.
    """
    top_margin = margin if top_margin is None else top_margin
    half = 0.5 * domain.physical_half_width if half_width is None else half_width
    out = []
    for _ in range(max_tries):
        x1 = rng.uniform(-half, half)
        lo = float(domain.interface.f(np.array(x1))) + margin
        hi = domain.h - top_margin
        if hi <= lo:
            continue
        p = np.array([x1, rng.uniform(lo, hi)])
        if domain.distance_to_interface(p[None])[0] > margin and -p[1] < float(domain.interface.f(np.array(x1))):
            out.append(p)
        if len(out) == n:
            return np.array(out)
    raise RuntimeError("could not draw enough admissible points")


def random_pairs(domain: geo.StripDomain, n: int, rng: np.random.Generator, margin: float = 0.9,
                 min_separation: float = 1.0, half_width: Optional[float] = None,
                 max_tries: int = 1000, top_margin: float = 0.4) -> list:
    """``n`` random point pairs above the interface, each pair at least ``min_separation`` apart."""
    pairs = []
    for _ in range(max_tries):
        a, b = random_upper_points(domain, 2, rng, margin, half_width, top_margin=top_margin)
        if np.hypot(*(a - b)) >= min_separation:
            pairs.append((a, b))
        if len(pairs) == n:
            return pairs
    raise RuntimeError("could not draw enough separated pairs")


def run_reciprocity(scene: Scene, pairs: Sequence, delta: Optional[float] = None) -> ReciprocityResult:
    """Exchange source and receiver for each pair and compare total fields."""
    rows = []
    cache = {}

    def solve_at(z):
        key = tuple(np.round(z, 14))
        if key not in cache:
            cache[key] = scene.point_source(z, "psw", delta)
        return cache[key]

    for z1, z2 in pairs:
        z1, z2 = np.asarray(z1, float), np.asarray(z2, float)
        if np.allclose(z1, z2):
            raise ValueError("reciprocity pair points must differ")
        r1, r2 = solve_at(z1), solve_at(z2)
        d1, d2 = r1.solution.incident.delta, r2.solution.incident.delta
        dmax = max(d1, d2)
        if np.hypot(*(z1 - z2)) <= 2.0 * dmax:
            raise ValueError("reciprocity points are closer than twice the smoothing radius")
        for z in (z1, z2):
            if scene.domain.distance_to_interface(z[None])[0] <= 2.0 * dmax:
                raise ValueError("reciprocity point too close to the interface")
        u12 = complex(eval_in_strip(r1.solution, z2, "total")[0])
        u21 = complex(eval_in_strip(r2.solution, z1, "total")[0])
        defect = abs(u12 - u21) / max(abs(u12), abs(u21))
        rows.append({"z1": z1.tolist(), "z2": z2.tolist(), "u12": u12, "u21": u21, "defect": defect})
    return ReciprocityResult(rows, max(r["defect"] for r in rows))


# --------------------------------------------------------------------------
# HSPSW consistency


@dataclass
class HspswResult:
    epsilons: np.ndarray
    errors: np.ndarray
    relative: np.ndarray
    slope: float
    floor_flags: np.ndarray
    reference_norm: float


def loglog_slope(x, y) -> float:
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(x, y, 1)[0])


def run_hspsw_consistency(scene: Scene, z, epsilons: Sequence[float], delta: Optional[float] = None,
                          exclusion: Optional[float] = None) -> HspswResult:
    """Compare the dipole-source solve with finite differences of point-source solves.

    The error ``|| -(u(z + eps e1) - u(z))/eps - u' ||`` is measured in the
    discrete ``H^1`` norm over the unstretched strip minus a ball that holds
    every smoothing ball.
    """
    eps = np.asarray(epsilons, float)
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    if len(eps) < 2:
        raise ValueError("need at least two epsilons")
    z = np.asarray(z, float)
    if delta is None:
        delta = max(default_delta(scene.mesh, scene.domain, p)
                    for p in [z] + [z + np.array([e, 0.0]) for e in eps])
    clear = scene.domain.distance_to_interface(z[None])[0]
    if clear <= eps.max() + delta:
        raise ValueError("source clearance must exceed max(eps) + delta")
    if exclusion is None:
        exclusion = delta + eps.max() + 2.0 * scene.h_mesh
    els = physical_elements(scene.mesh, scene.domain)
    far = np.hypot(*(scene.mesh.centroids[els] - z).T) > exclusion
    els = els[far]

    base = scene.point_source(z, "psw", delta).solution
    direct = scene.point_source(z, "hspsw", delta).solution
    ref = h1_norm(direct, els, "scattered")
    errs = []
    for e in eps:
        shifted = scene.point_source(z + np.array([e, 0.0]), "psw", delta).solution
        fd = (-1.0 / e) * (shifted - base)
        errs.append(h1_norm(fd - direct, els, "scattered"))
    errs = np.array(errs)
    order = np.argsort(-eps)
    es, er = eps[order], errs[order]
    flags = np.zeros(len(es), bool)
    for i in range(1, len(es)):
        if er[i] > er[i - 1] / 1.2:
            flags[i:] = True
            break
    keep = ~flags
    slope = loglog_slope(es[keep], er[keep]) if keep.sum() >= 2 else float("nan")
    return HspswResult(es, er, er / ref, slope, flags, ref)


# --------------------------------------------------------------------------
# Source approach


@dataclass
class ApproachResult:
    j: np.ndarray
    points: np.ndarray
    norms_total: np.ndarray
    norms_scattered: np.ndarray
    control: np.ndarray
    max_over_median: float
    monotone_tail: bool
    control_growth: float
    energy_defects: np.ndarray


def monotone_growth(values, last: int = 5, min_slope: float = 0.1) -> bool:
    """True when the last ``last`` values increase strictly with log-log slope above ``min_slope``.

    The slope is taken against the index ``j = 1 .. len(values)``; a bounded
    sequence converging from below has a slope tending to zero.
    """
    v = np.asarray(values, float)
    if len(v) < last:
        raise ValueError("sequence shorter than the monotonicity window")
    tail = v[-last:]
    if not np.all(np.diff(tail) > 0):
        return False
    j = np.arange(len(v) - last + 1, len(v) + 1)
    return loglog_slope(j, tail) >= min_slope


def annulus_h1_norm(k, z, inner: float, outer: float, n_r: int = 48, n_t: int = 96) -> float:
    """``H^1`` norm of the dipole incident field over the annulus ``inner < |x - z| < outer``."""
    s, ws = np.polynomial.legendre.leggauss(n_r)
    a, b = np.log(inner), np.log(outer)
    lr = 0.5 * (b - a) * s + 0.5 * (a + b)
    r, wr = np.exp(lr), 0.5 * (b - a) * ws * np.exp(lr)
    th = 2.0 * np.pi * np.arange(n_t) / n_t
    R, T = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([z[0] + R * np.cos(T), z[1] + R * np.sin(T)], axis=-1)
    v = hspsw_field(k, pts, z)
    g = hspsw_grad(k, pts, z)
    dens = np.abs(v) ** 2 + np.sum(np.abs(g) ** 2, axis=-1)
    return float(np.sqrt(np.sum(dens * (wr * r)[:, None]) * 2.0 * np.pi / n_t))


def run_source_approach(config: geo.SceneConfig, x_star: float, j_max: int = 20, delta: float = 0.4,
                        distance: float = 1.0, side: float = 1.0, kind: str = "hspsw",
                        h_mesh: Optional[float] = None, grading: float = 0.1,
                        k_center: Optional[Sequence[float]] = None) -> ApproachResult:
    """Norms over a fixed square ``K`` as the source approaches ``z*`` on the interface.

    Sources ``z_j = z* + (delta / j) nu`` with ``nu`` the unit normal pointing
    into the upper medium.  One graded mesh and one factorization serve all
    sources.
    """
    dom = geo.build_scene(config)
    f, df = dom.interface.f, dom.interface.df
    zs = np.array([x_star, float(f(np.array(x_star)))])
    nu = np.array([-float(df(np.array(x_star))), 1.0])
    nu /= np.linalg.norm(nu)
    j = np.arange(1, j_max + 1)
    pts = zs[None, :] + (delta / j)[:, None] * nu[None, :]
    if k_center is None:
        k_center = (zs[0] + delta + distance + 0.5 * side, zs[1])
    kc = np.asarray(k_center, float)
    lo, hi = kc - 0.5 * side, kc + 0.5 * side
    # distance from the square to the ball B_delta(z*)
    gap = np.hypot(*np.maximum(np.maximum(lo - zs, zs - hi), 0.0)) - delta
    if gap <= 0:
        raise ValueError("the set K intersects the ball around z*")
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    if np.any(dom.region_of(corners) == 0) or np.any(np.abs(corners[:, 0]) >= dom.physical_half_width):
        raise ValueError("the set K must lie inside the unstretched strip")
    hm = float(h_mesh if h_mesh is not None else config.h_mesh)
    h_min = delta / (8.0 * j_max)

    def size(p):
        r = np.hypot(p[:, 0] - zs[0], p[:, 1] - zs[1])
        return np.clip(grading * r, h_min, hm)

    scene = Scene(config, h_mesh=hm, points=pts, size=size)
    cen = scene.mesh.centroids
    in_k = np.nonzero(np.all((cen >= lo) & (cen <= hi), axis=1))[0]
    if len(in_k) == 0:
        raise ValueError("K contains no mesh elements")
    n_tot, n_sc, ctrl, edef = [], [], [], []
    k = wavenumber(config.k1_sq)
    outer = 0.5 * delta
    for p in pts:
        rep = scene.point_source(p, kind)
        n_tot.append(h1_norm(rep.solution, in_k, "total"))
        n_sc.append(h1_norm(rep.solution, in_k, "scattered"))
        rho = 0.5 * float(dom.distance_to_interface(p[None])[0])
        ctrl.append(annulus_h1_norm(k, p, rho, max(outer, 2.0 * rho)))
        edef.append(rep.energy_defect)
    n_tot, n_sc, ctrl = np.array(n_tot), np.array(n_sc), np.array(ctrl)
    return ApproachResult(j, pts, n_tot, n_sc, ctrl, float(n_tot.max() / np.median(n_tot)),
                          monotone_growth(n_tot), float(ctrl[-1] / ctrl[0]), np.array(edef))


# --------------------------------------------------------------------------
# Dataset


@dataclass(frozen=True)
class MeasurementGeometry:
    """Sources on ``x2 = b`` and receivers on ``x2 = c``."""

    b: float
    c: float
    source_range: tuple
    receiver_range: tuple
    n_sources: int
    n_receivers: int

    def sources(self) -> np.ndarray:
        x = np.linspace(*self.source_range, self.n_sources)
        return np.column_stack([x, np.full(self.n_sources, self.b)])

    def receivers(self) -> np.ndarray:
        x = np.linspace(*self.receiver_range, self.n_receivers)
        return np.column_stack([x, np.full(self.n_receivers, self.c)])

    def validate(self, domain: geo.StripDomain) -> None:
        fp = domain.interface.f_plus
        if not (fp < self.b <= domain.h and fp < self.c <= domain.h):
            raise ValueError("source and receiver heights must lie in (f_plus, h]")
        if self.c < self.b:
            raise ValueError("receiver height must not be below the source height")
        if self.b >= domain.h:
            raise ValueError("sources must lie strictly inside the strip")
        lim = 0.5 * domain.A
        for lo, hi in (self.source_range, self.receiver_range):
            if max(abs(lo), abs(hi)) > lim:
                raise ValueError("measurement segments must stay within |x1| <= A/2")
        if self.n_sources < 1 or self.n_receivers < 1:
            raise ValueError("need at least one source and one receiver")


@dataclass
class ScatteringDataset:
    values: np.ndarray
    receivers: np.ndarray
    sources: np.ndarray
    metadata: dict

    @property
    def shape(self):
        return self.values.shape


def _fmt(v: float) -> str:
    return repr(float(v))


def generate_dataset(config: geo.SceneConfig, geometry: MeasurementGeometry, path=None,
                     store: str = "scattered", h_mesh: Optional[float] = None,
                     delta: Optional[float] = None) -> ScatteringDataset:
    """Solve once per source and record the field at every receiver.

    ``values[i, j] = u(x_i; z_j)``.  When a receiver coincides with a source
    location, the reciprocity defect over such pairs is recorded in the
    metadata.
    """
    if store not in ("scattered", "total"):
        raise ValueError("store must be 'scattered' or 'total'")
    dom = geo.build_scene(config)
    geometry.validate(dom)
    src, rcv = geometry.sources(), geometry.receivers()
    pts = np.unique(np.round(np.vstack([src, rcv]), 14), axis=0)
    scene = Scene(config, h_mesh=h_mesh, points=pts)
    U = np.empty((len(rcv), len(src)), dtype=complex)
    for jj, z in enumerate(src):
        rep = scene.point_source(z, "psw", delta)
        if store == "scattered":
            U[:, jj] = eval_in_strip(rep.solution, rcv, "scattered")
        else:
            same = np.all(np.isclose(rcv, z, rtol=0, atol=1e-12), axis=1)
            vals = np.full(len(rcv), np.nan + 0j)
            vals[~same] = eval_in_strip(rep.solution, rcv[~same], "total")
            U[:, jj] = vals
    # reciprocity spot check over sources that are also receivers
    match = {}
    for jj, z in enumerate(src):
        hit = np.nonzero(np.all(np.isclose(rcv, z, rtol=0, atol=1e-12), axis=1))[0]
        if len(hit):
            match[jj] = int(hit[0])
    defects = []
    keys = sorted(match)
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            p, q = keys[a], keys[b]
            u_pq, u_qp = U[match[q], p], U[match[p], q]
            defects.append(abs(u_pq - u_qp) / max(abs(u_pq), abs(u_qp)))
    meta = {
        "format": "roughscat-dataset-v1",
        "config_hash": config.fingerprint(),
        "field": store,
        "k1_sq": f"{_fmt(np.real(config.k1_sq))}{np.imag(config.k1_sq):+.17g}j",
        "k2_sq": f"{_fmt(np.real(config.k2_sq))}{np.imag(config.k2_sq):+.17g}j",
        "h_mesh": _fmt(scene.h_mesh),
        "mesh_vertices": str(scene.mesh.n_vertices),
        "n_sources": str(len(src)),
        "n_receivers": str(len(rcv)),
        "source_height": _fmt(geometry.b),
        "receiver_height": _fmt(geometry.c),
        "reciprocity_pairs": str(len(defects)),
        "reciprocity_max_defect": _fmt(max(defects)) if defects else "none",
    }
    ds = ScatteringDataset(U, rcv, src, meta)
    if path is not None:
        write_dataset(ds, path)
    return ds


def write_dataset(ds: ScatteringDataset, path) -> None:
    buf = io.StringIO()
    for k, v in ds.metadata.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["src_index", "rcv_index", "src_x1", "src_x2", "rcv_x1", "rcv_x2", "re", "im"])
    for jj, z in enumerate(ds.sources):
        for ii, x in enumerate(ds.receivers):
            v = ds.values[ii, jj]
            w.writerow([jj, ii, _fmt(z[0]), _fmt(z[1]), _fmt(x[0]), _fmt(x[1]), _fmt(v.real), _fmt(v.imag)])
    Path(path).write_text(buf.getvalue())


def read_dataset(path) -> ScatteringDataset:
    meta, rows = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            else:
                rows.append(line)
    rd = list(csv.DictReader(rows))
    ns, nr = int(meta["n_sources"]), int(meta["n_receivers"])
    U = np.empty((nr, ns), dtype=complex)
    src, rcv = np.empty((ns, 2)), np.empty((nr, 2))
    for r in rd:
        j, i = int(r["src_index"]), int(r["rcv_index"])
        U[i, j] = complex(float(r["re"]), float(r["im"]))
        src[j] = float(r["src_x1"]), float(r["src_x2"])
        rcv[i] = float(r["rcv_x1"]), float(r["rcv_x2"])
    return ScatteringDataset(U, rcv, src, meta)


# --------------------------------------------------------------------------
# Convergence


@dataclass
class ConvergenceReport:
    parameter: str
    ladder: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    note: str = ""


def observed_orders(params, errors) -> np.ndarray:
    p, e = np.asarray(params, float), np.asarray(errors, float)
    return np.log(e[:-1] / e[1:]) / np.log(p[:-1] / p[1:])


def mms_solution(center=(0.3, 0.1), radius: float = 1.0, kappa: float = 1.3):
    """Smooth compactly supported field ``(1 - r^2/R^2)^5 exp(i kappa x1)`` and its Laplacian."""
    c = np.asarray(center, float)
    R2 = radius**2

    def parts(x):
        x = np.asarray(x, float)
        d = x - c
        r2 = np.sum(d**2, axis=-1)
        s = np.clip(1.0 - r2 / R2, 0.0, None)
        phi = s**5
        lap_phi = 80.0 * s**3 * r2 / R2**2 - 20.0 * s**4 / R2
        d1phi = -10.0 * s**4 * d[..., 0] / R2
        e = np.exp(1j * kappa * x[..., 0])
        return phi * e, (lap_phi + 2j * kappa * d1phi - kappa**2 * phi) * e

    def u(x):
        return parts(x)[0]

    def lap(x):
        return parts(x)[1]

    return u, lap


def _mms_error(config: geo.SceneConfig, h_mesh: float, center, radius, kappa):
    scene = Scene(config, h_mesh=h_mesh)
    u, lap = mms_solution(center, radius, kappa)
    dom = scene.domain

    def g(x):
        ksq = np.where(dom.region_of(x) == geo.REGION_UPPER, config.k1_sq, config.k2_sq)
        return lap(x) + ksq * u(x)

    rep = scene.local_source(LocalSource(g, tuple(center), radius))
    err, nrm = l2_error(rep.solution, u, physical_elements(scene.mesh, dom), "smoothed")
    return err / nrm, rep


def run_convergence(config: geo.SceneConfig, parameter: str, ladder: Sequence[float],
                    source=(0.0, 1.0), c: float = 1.5, n_rcv: int = 33,
                    mms: Optional[dict] = None) -> ConvergenceReport:
    """Convergence study over one parameter.

    ``h_mesh``: manufactured-solution L2 errors (``mms`` gives center,
    radius, kappa).  ``A``, ``delta``: receiver-line drift of the scattered
    point-source field between successive rungs.  ``Xi``: drift of the flat
    reference as its spectral cutoff (in e-folds) grows.
    """
    lad = np.asarray(ladder, float)
    if len(lad) < 3:
        raise ValueError("a convergence ladder needs at least three rungs")
    d = np.diff(lad)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("the ladder must be monotone")
    if parameter == "h_mesh":
        m = dict(center=(0.3, 0.1), radius=1.0, kappa=1.3)
        m.update(mms or {})
        errs = np.array([_mms_error(config, h, m["center"], m["radius"], m["kappa"])[0] for h in lad])
        rep = ConvergenceReport(parameter, lad, errs, observed_orders(lad, errs))
    elif parameter in ("A", "delta", "Xi"):
        fields = []
        if parameter == "Xi":
            rcv = np.column_stack([np.linspace(-4.0, 4.0, n_rcv), np.full(n_rcv, c)])
            for t in lad:
                ref = TwoLayerReference(config.k1_sq, config.k2_sq, tuple(source), tail=float(t))
                fields.append(reference_field(ref, rcv))
        elif parameter == "delta":
            half = min(0.25 * config.A, 4.0)
            rcv = np.column_stack([np.linspace(-half, half, n_rcv), np.full(n_rcv, c)])
            scene = Scene(config, points=np.vstack([rcv, np.asarray(source, float)[None]]))
            for val in lad:
                sol = scene.point_source(source, "psw", float(val)).solution
                fields.append(eval_in_strip(sol, rcv, "scattered"))
        else:
            for val in lad:
                data = config.to_dict()
                data["A"] = float(val)
                cfg = geo.SceneConfig.from_dict(data)
                half = 0.25 * lad.min()
                rcv = np.column_stack([np.linspace(-half, half, n_rcv), np.full(n_rcv, c)])
                scene = Scene(cfg, points=rcv)
                sol = scene.point_source(source, "psw").solution
                fields.append(eval_in_strip(sol, rcv, "scattered"))
        drift = np.array([np.linalg.norm(b - a) / np.linalg.norm(b) for a, b in zip(fields[:-1], fields[1:])])
        rep = ConvergenceReport(parameter, lad, drift, np.full(max(len(drift) - 1, 0), np.nan),
                                "errors are drifts between successive rungs")
    else:
        raise ValueError(f"unknown convergence parameter {parameter!r}")
    if len(rep.errors) >= 3 and np.any(rep.errors[1:] > 10.0 * rep.errors[:-1]):
        log.warning("non-monotone error growth in %s ladder: %s", parameter, rep.errors)
    return rep
