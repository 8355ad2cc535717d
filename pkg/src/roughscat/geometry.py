"""Scene description and conforming triangulation of the truncated strip.

The computational domain is ``{|x1| < A, -h < x2 < h}`` minus the closed
obstacle.  A rough interface ``x2 = f(x1)`` splits it into an upper region
(tag 1) and a lower region (tag 2).  The lines ``x2 = +h`` and ``x2 = -h``
carry uniformly spaced nodes so their traces live on FFT grids.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import triangle
from scipy.spatial import cKDTree

__all__ = [
    "TAG_TOP",
    "TAG_BOTTOM",
    "TAG_INTERFACE",
    "TAG_COATED",
    "TAG_SOFT",
    "TAG_WALL",
    "REGION_UPPER",
    "REGION_LOWER",
    "GeometryError",
    "MeshError",
    "RoughInterface",
    "make_interface",
    "Obstacle",
    "make_obstacle",
    "AbsorbingLayer",
    "StripDomain",
    "SceneConfig",
    "build_scene",
    "Mesh",
    "generate_mesh",
]

log = logging.getLogger(__name__)

TAG_TOP = 1
TAG_BOTTOM = 2
TAG_INTERFACE = 3
TAG_COATED = 4
TAG_SOFT = 5
TAG_WALL = 6

REGION_UPPER = 1
REGION_LOWER = 2

TAG_NAMES = {
    TAG_TOP: "top",
    TAG_BOTTOM: "bottom",
    TAG_INTERFACE: "interface",
    TAG_COATED: "coated",
    TAG_SOFT: "soft",
    TAG_WALL: "wall",
}


class GeometryError(ValueError):
    """Invalid scene description."""


class MeshError(RuntimeError):
    """Mesh generation failed or the requested resolution is inadequate."""


# --------------------------------------------------------------------------
# Rough interface


@dataclass(frozen=True)
class RoughInterface:
    """Graph interface ``x2 = f(x1)`` with sampled bounds.

    Attributes
    ----------
    family, params
        Parametric family name and its parameters (kept for serialisation).
    f, df, d2f
        Vectorised callables for the profile and its first two derivatives.
    f_minus, f_plus
        Lower and upper bound of ``f`` over the sampling window.
    """

    family: str
    params: dict
    f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    df: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    d2f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_minus: float = 0.0
    f_plus: float = 0.0
    window: float = 0.0


def _windowed(g, dg, d2g, width):
    if width is None:
        return g, dg, d2g
    w2 = float(width) ** 2

    def win(x):
        return np.exp(-(x**2) / w2)

    def f(x):
        return g(x) * win(x)

    def df(x):
        return (dg(x) - 2.0 * x / w2 * g(x)) * win(x)

    def d2f(x):
        return (d2g(x) - 4.0 * x / w2 * dg(x) + (4.0 * x**2 / w2**2 - 2.0 / w2) * g(x)) * win(x)

    return f, df, d2f


def _profile_functions(family: str, params: dict):
    p = dict(params)
    if family == "flat":
        c = float(p.get("height", 0.0))
        return (lambda x: np.full_like(np.asarray(x, float), c),
                lambda x: np.zeros_like(np.asarray(x, float)),
                lambda x: np.zeros_like(np.asarray(x, float)))
    if family == "sinusoidal":
        a = float(p.get("amplitude", 0.1))
        w = float(p.get("wavenumber", 1.0))
        ph = float(p.get("phase", 0.0))
        g = lambda x: a * np.sin(w * np.asarray(x, float) + ph)
        dg = lambda x: a * w * np.cos(w * np.asarray(x, float) + ph)
        d2g = lambda x: -a * w * w * np.sin(w * np.asarray(x, float) + ph)
        return _windowed(g, dg, d2g, p.get("window"))
    if family == "gaussian_bump":
        a = float(p.get("amplitude", 0.2))
        s = float(p.get("width", 1.0))
        c = float(p.get("center", 0.0))
        one = lambda x: np.ones_like(np.asarray(x, float))
        zero = lambda x: np.zeros_like(np.asarray(x, float))
        f, df, d2f = _windowed(one, zero, zero, s)
        return (lambda x: a * f(np.asarray(x, float) - c),
                lambda x: a * df(np.asarray(x, float) - c),
                lambda x: a * d2f(np.asarray(x, float) - c))
    if family == "fourier":
        cos_c = np.asarray(p.get("cos", []), float)
        sin_c = np.asarray(p.get("sin", []), float)
        period = float(p.get("period", 2.0 * np.pi))
        base = 2.0 * np.pi / period
        n_c = np.arange(len(cos_c))
        n_s = np.arange(1, len(sin_c) + 1)

        def g(x):
            x = np.asarray(x, float)[..., None]
            return (cos_c * np.cos(base * n_c * x)).sum(-1) + (sin_c * np.sin(base * n_s * x)).sum(-1)

        def dg(x):
            x = np.asarray(x, float)[..., None]
            return (-cos_c * base * n_c * np.sin(base * n_c * x)).sum(-1) + (
                sin_c * base * n_s * np.cos(base * n_s * x)).sum(-1)

        def d2g(x):
            x = np.asarray(x, float)[..., None]
            return (-cos_c * (base * n_c) ** 2 * np.cos(base * n_c * x)).sum(-1) + (
                -sin_c * (base * n_s) ** 2 * np.sin(base * n_s * x)).sum(-1)

        return _windowed(g, dg, d2g, p.get("window"))
    raise GeometryError(f"unknown interface family {family!r}")


def make_interface(family: str, params: Optional[dict] = None, window: float = 64.0,
                   samples: int = 40001) -> RoughInterface:
    """Build a :class:`RoughInterface` and sample its bounds on ``[-window, window]``."""
    params = dict(params or {})
    f, df, d2f = _profile_functions(family, params)
    x = np.linspace(-window, window, samples)
    vals = [f(x), df(x), d2f(x)]
    if not all(np.all(np.isfinite(v)) for v in vals):
        raise GeometryError("interface profile or its derivatives are not finite on the window")
    return RoughInterface(family, params, f, df, d2f, float(vals[0].min()), float(vals[0].max()),
                          float(window))


# --------------------------------------------------------------------------
# Obstacle


@dataclass(frozen=True)
class Obstacle:
    """Closed parametric curve with a coated/sound-soft partition.

    The curve is traversed counter-clockwise for ``t`` in ``[0, 1)``.  The
    partition is a tuple of ``(start, end, label)`` with label ``"coated"``
    (impedance) or ``"soft"`` (Dirichlet).
    """

    curve: str
    params: dict
    partition: tuple
    beta_spec: object = 1.0

    # -- curve --------------------------------------------------------------
    def _shape(self):
        p = self.params
        cx, cy = (float(v) for v in p.get("center", (0.0, -1.0)))
        if self.curve == "circle":
            r = float(p["radius"])
            return cx, cy, r, r, 0.0
        if self.curve == "ellipse":
            a, b = (float(v) for v in p["semi_axes"])
            return cx, cy, a, b, float(p.get("angle", 0.0))
        raise GeometryError(f"unknown obstacle curve {self.curve!r}")

    def point(self, t):
        cx, cy, a, b, ang = self._shape()
        th = 2.0 * np.pi * np.asarray(t, float)
        u, v = a * np.cos(th), b * np.sin(th)
        ca, sa = math.cos(ang), math.sin(ang)
        return np.stack([cx + ca * u - sa * v, cy + sa * u + ca * v], axis=-1)

    def derivative(self, t):
        _, _, a, b, ang = self._shape()
        th = 2.0 * np.pi * np.asarray(t, float)
        u, v = -2.0 * np.pi * a * np.sin(th), 2.0 * np.pi * b * np.cos(th)
        ca, sa = math.cos(ang), math.sin(ang)
        return np.stack([ca * u - sa * v, sa * u + ca * v], axis=-1)

    def normal(self, t):
        """Unit normal pointing out of the obstacle."""
        d = self.derivative(t)
        n = np.stack([d[..., 1], -d[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def parameter_of(self, x):
        """Curve parameter of points on (or near) the curve."""
        cx, cy, a, b, ang = self._shape()
        x = np.asarray(x, float)
        dx, dy = x[..., 0] - cx, x[..., 1] - cy
        ca, sa = math.cos(ang), math.sin(ang)
        u, v = ca * dx + sa * dy, -sa * dx + ca * dy
        return np.mod(np.arctan2(v / b, u / a) / (2.0 * np.pi), 1.0)

    def contains(self, x):
        cx, cy, a, b, ang = self._shape()
        x = np.asarray(x, float)
        dx, dy = x[..., 0] - cx, x[..., 1] - cy
        ca, sa = math.cos(ang), math.sin(ang)
        u, v = ca * dx + sa * dy, -sa * dx + ca * dy
        return (u / a) ** 2 + (v / b) ** 2 < 1.0

    @property
    def center(self) -> tuple[float, float]:
        cx, cy, *_ = self._shape()
        return cx, cy

    @property
    def diameter(self) -> float:
        _, _, a, b, _ = self._shape()
        return 2.0 * min(a, b)

    # -- partition and impedance -------------------------------------------
    def label_at(self, t):
        t = np.mod(np.asarray(t, float), 1.0)
        out = np.empty(t.shape, dtype=object)
        for start, end, label in self.partition:
            out[(t >= start) & (t < end)] = label
        return out

    def is_coated(self, t):
        return self.label_at(t) == "coated"

    def beta(self, t):
        """Impedance at curve parameter ``t`` (zero on the sound-soft part)."""
        t = np.asarray(t, float)
        spec = self.beta_spec
        if isinstance(spec, (int, float)):
            val = np.full(t.shape, float(spec))
        elif spec.get("family", "constant") == "constant":
            val = np.full(t.shape, float(spec["value"]))
        elif spec["family"] == "cosine":
            val = float(spec["mean"]) + float(spec["amplitude"]) * np.cos(2.0 * np.pi * t)
        else:
            raise GeometryError(f"unknown impedance family {spec['family']!r}")
        return np.where(self.is_coated(t), val, 0.0)

    def coated_measure(self, n: int = 4096) -> float:
        t = (np.arange(n) + 0.5) / n
        speed = np.linalg.norm(self.derivative(t), axis=-1)
        return float(np.sum(speed * self.is_coated(t)) / n)

    def partition_breaks(self):
        return sorted({float(s) for s, _, _ in self.partition} | {0.0})


def make_obstacle(curve: str, params: dict, partition=None, beta=1.0) -> Obstacle:
    """Validate and build an :class:`Obstacle`.

    ``partition`` is a list of ``{"start", "end", "label"}`` mappings (or
    equivalent tuples).  By default the whole boundary is coated.
    """
    if partition is None:
        partition = [(0.0, 1.0, "coated")]
    parts = []
    for item in partition:
        if isinstance(item, dict):
            item = (item["start"], item["end"], item["label"])
        s, e, lab = float(item[0]), float(item[1]), str(item[2])
        if lab not in ("coated", "soft"):
            raise GeometryError(f"partition label must be 'coated' or 'soft', got {lab!r}")
        if not (0.0 <= s < e <= 1.0):
            raise GeometryError(f"partition interval [{s}, {e}) is not inside [0, 1)")
        parts.append((s, e, lab))
    parts.sort()
    if abs(parts[0][0]) > 0 or abs(parts[-1][1] - 1.0) > 0:
        raise GeometryError("partition must cover [0, 1)")
    for (s0, e0, _), (s1, _, _) in zip(parts[:-1], parts[1:]):
        if e0 != s1:
            raise GeometryError("partition intervals must be disjoint and contiguous")
    obs = Obstacle(curve, dict(params), tuple(parts), beta)
    obs._shape()  # validates the curve family
    t = np.linspace(0.0, 1.0, 2048, endpoint=False)
    coated = obs.is_coated(t)
    raw = Obstacle(curve, dict(params), ((0.0, 1.0, "coated"),), beta).beta(t)
    if np.any(raw[coated] < 0.0):
        raise GeometryError("impedance beta must be non-negative on the coated part")
    if _self_intersects(obs.point(np.linspace(0.0, 1.0, 257)[:-1])):
        raise GeometryError("obstacle boundary is not a simple closed curve")
    return obs


def _self_intersects(poly: np.ndarray) -> bool:
    n = len(poly)
    p, q = poly, np.roll(poly, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]

    def orient(a, b, c):
        return np.sign((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    o1 = orient(p[i], q[i], p[j])
    o2 = orient(p[i], q[i], q[j])
    o3 = orient(p[j], q[j], p[i])
    o4 = orient(p[j], q[j], q[i])
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


# --------------------------------------------------------------------------
# Strip


@dataclass(frozen=True)
class AbsorbingLayer:
    """Complex coordinate stretching in ``x1`` for ``start < |x1| < A``.

    ``s(x1) = 1 + i sigma(x1)/k_ref`` with a quadratic profile whose integral
    across the layer equals ``strength``.
    """

    start: float
    end: float
    strength: float = 15.0

    def sigma(self, x1):
        width = self.end - self.start
        d = np.clip((np.abs(np.asarray(x1, float)) - self.start) / width, 0.0, None)
        return 3.0 * self.strength / width * d**2

    def stretch(self, x1, k_ref):
        return 1.0 + 1j * self.sigma(x1) / float(np.real(k_ref))


@dataclass(frozen=True)
class StripDomain:
    """Validated truncated strip with interface and optional obstacle."""

    h: float
    A: float
    interface: RoughInterface
    obstacle: Optional[Obstacle] = None
    layer: Optional[AbsorbingLayer] = None

    @property
    def physical_half_width(self) -> float:
        """Half-width of the region free of coordinate stretching."""
        return self.layer.start if self.layer is not None else self.A

    def region_of(self, x):
        """1 above the interface, 2 below, 0 inside the obstacle or outside the strip."""
        x = np.asarray(x, float)
        above = x[..., 1] > self.interface.f(x[..., 0])
        reg = np.where(above, REGION_UPPER, REGION_LOWER)
        inside = (np.abs(x[..., 0]) <= self.A) & (np.abs(x[..., 1]) <= self.h)
        if self.obstacle is not None:
            inside &= ~self.obstacle.contains(x)
        return np.where(inside, reg, 0)

    def distance_to_interface(self, x, samples: int = 4001):
        """Distance from points to the interface graph (dense sampling)."""
        x = np.atleast_2d(np.asarray(x, float))
        out = np.empty(len(x))
        for n, p in enumerate(x):
            s = np.linspace(p[0] - 4.0 * self.h, p[0] + 4.0 * self.h, samples)
            d = np.hypot(s - p[0], self.interface.f(s) - p[1])
            k = int(np.argmin(d))
            lo, hi = s[max(k - 1, 0)], s[min(k + 1, samples - 1)]
            s2 = np.linspace(lo, hi, 201)
            out[n] = np.min(np.hypot(s2 - p[0], self.interface.f(s2) - p[1]))
        return out

    def distance_to_obstacle(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        if self.obstacle is None:
            return np.full(len(x), np.inf)
        t = np.linspace(0.0, 1.0, 4096, endpoint=False)
        pts = self.obstacle.point(t)
        d, _ = cKDTree(pts).query(x)
        return d


def _validate_domain(dom: StripDomain) -> None:
    itf = dom.interface
    if dom.h <= itf.f_plus:
        raise GeometryError(f"strip half-height h={dom.h} must exceed f_plus={itf.f_plus:.6g}")
    if -dom.h >= itf.f_minus:
        raise GeometryError(f"strip half-height h={dom.h} must exceed -f_minus={-itf.f_minus:.6g}")
    if dom.A < 4.0 * dom.h:
        raise GeometryError(f"lateral half-width A={dom.A} must be at least 4h={4 * dom.h}")
    if itf.window < dom.A:
        raise GeometryError("interface sampling window is narrower than the strip")
    if dom.layer is not None and not (0.0 < dom.layer.start < dom.A):
        raise GeometryError("absorbing layer must start inside the strip")
    obs = dom.obstacle
    if obs is None:
        return
    pts = obs.point(np.linspace(0.0, 1.0, 4096, endpoint=False))
    top = float(pts[:, 1].max())
    if top >= itf.f_minus or top >= 0.0:
        raise GeometryError(
            f"obstacle reaches x2={top:.4g}; it must stay strictly below min(f_minus, 0)={min(itf.f_minus, 0.0):.4g}")
    if pts[:, 1].min() <= -dom.h:
        raise GeometryError("obstacle crosses the bottom line x2 = -h")
    if np.abs(pts[:, 0]).max() >= dom.physical_half_width:
        raise GeometryError("obstacle must lie inside the unstretched part of the strip")


# --------------------------------------------------------------------------
# Configuration


def _complex_from(value) -> complex:
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    return complex(value)


def _complex_to(value: complex) -> dict:
    return {"re": float(np.real(value)), "im": float(np.imag(value))}


@dataclass
class SceneConfig:
    """Structured scene configuration (JSON serialisable).

    Besides the scene keys, ``layer`` configures the lateral absorbing layer
    (``{"start_fraction": 0.5, "strength": 15}`` by default, ``None``
    disables it), and ``extra`` carries subcommand-specific settings.
    """

    profile: dict
    h: float
    A: float
    k1_sq: complex
    k2_sq: complex
    h_mesh: float
    obstacle: Optional[dict] = None
    layer: Optional[dict] = field(default_factory=lambda: {"start_fraction": 0.5, "strength": 15.0})
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneConfig":
        data = dict(data)
        known = {"profile", "obstacle", "h", "A", "k1_sq", "k2_sq", "h_mesh", "layer"}
        extra = {k: v for k, v in data.items() if k not in known}
        kwargs = {}
        if "layer" in data:
            kwargs["layer"] = data["layer"]
        return cls(
            profile=dict(data["profile"]),
            h=float(data["h"]),
            A=float(data["A"]),
            k1_sq=_complex_from(data["k1_sq"]),
            k2_sq=_complex_from(data["k2_sq"]),
            h_mesh=float(data["h_mesh"]),
            obstacle=data.get("obstacle"),
            extra=extra,
            **kwargs,
        )

    @classmethod
    def from_json(cls, path) -> "SceneConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        out = {
            "profile": self.profile,
            "obstacle": self.obstacle,
            "h": self.h,
            "A": self.A,
            "k1_sq": _complex_to(self.k1_sq),
            "k2_sq": _complex_to(self.k2_sq),
            "h_mesh": self.h_mesh,
            "layer": self.layer,
        }
        out.update(self.extra)
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def build_scene(config: SceneConfig) -> StripDomain:
    """Validate a configuration and return the corresponding :class:`StripDomain`."""
    prof = config.profile
    window = max(64.0, 1.5 * config.A)
    itf = make_interface(prof["family"], prof.get("params", {}), window=window)
    obs = None
    if config.obstacle:
        o = config.obstacle
        obs = make_obstacle(o.get("curve", "circle"), o["params"], o.get("partition"), o.get("beta", 1.0))
    layer = None
    if config.layer:
        frac = float(config.layer.get("start_fraction", 0.5))
        layer = AbsorbingLayer(frac * config.A, config.A, float(config.layer.get("strength", 15.0)))
    dom = StripDomain(config.h, config.A, itf, obs, layer)
    _validate_domain(dom)
    return dom


def make_domain(h: float, A: float, interface: RoughInterface, obstacle: Optional[Obstacle] = None,
                layer: Optional[AbsorbingLayer] | str = "default") -> StripDomain:
    """Programmatic counterpart of :func:`build_scene`."""
    if isinstance(layer, str):
        layer = AbsorbingLayer(0.5 * A, A, 15.0)
    dom = StripDomain(float(h), float(A), interface, obstacle, layer)
    _validate_domain(dom)
    return dom


# --------------------------------------------------------------------------
# Mesh


@dataclass(frozen=True)
class Mesh:
    """Conforming P1 triangulation.

    Attributes
    ----------
    vertices : (n, 2) float array
    triangles : (m, 3) int array, counter-clockwise
    regions : (m,) int array, 1 above the interface and 2 below
    edges : (e, 2) int array of tagged edges (boundary and interface)
    edge_tags : (e,) int array
    top_nodes, bottom_nodes : int arrays
        Nodes on ``x2 = +h`` and ``x2 = -h`` sorted by ``x1``; both have
        ``n_intervals + 1`` entries on a uniform grid.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    edges: np.ndarray
    edge_tags: np.ndarray
    top_nodes: np.ndarray
    bottom_nodes: np.ndarray
    h_mesh: float
    A: float
    h: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_intervals(self) -> int:
        return len(self.top_nodes) - 1

    @property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @property
    def signed_areas(self) -> np.ndarray:
        p = self.corners
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    def edge_lengths(self, tag: Optional[int] = None) -> np.ndarray:
        e = self.edges if tag is None else self.edges[self.edge_tags == tag]
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def nodes_with_tag(self, tag: int) -> np.ndarray:
        return np.unique(self.edges[self.edge_tags == tag])

    def element_diameters(self) -> np.ndarray:
        p = self.corners
        d = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.hypot(d[..., 0], d[..., 1]).max(axis=1)

    def _tree(self):
        # cache on the instance; the dataclass is frozen, so bypass __setattr__
        tree = self.__dict__.get("_ctree")
        if tree is None:
            tree = cKDTree(self.centroids)
            object.__setattr__(self, "_ctree", tree)
        return tree

    def barycentric(self, tri: np.ndarray, points: np.ndarray) -> np.ndarray:
        p = self.corners[tri]
        t = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
        rhs = points - p[:, 0]
        lam = np.linalg.solve(t, rhs[..., None])[..., 0]
        return np.column_stack([1.0 - lam.sum(axis=1), lam])

    def locate(self, points, tol: float = 1e-10):
        """Element index and barycentric coordinates of each point.

        Raises
        ------
        ValueError
            If a point lies outside the mesh.
        """
        pts = np.atleast_2d(np.asarray(points, float))
        k = min(16, len(self.triangles))
        _, cand = self._tree().query(pts, k=k)
        cand = np.atleast_2d(cand)
        tri = np.full(len(pts), -1)
        bary = np.zeros((len(pts), 3))
        best = np.full(len(pts), -np.inf)
        for col in range(cand.shape[1]):
            c = cand[:, col]
            lam = self.barycentric(c, pts)
            score = lam.min(axis=1)
            better = score > best
            tri[better], bary[better], best[better] = c[better], lam[better], score[better]
        miss = np.nonzero(best < -tol)[0]
        for n in miss:
            lam = self.barycentric(np.arange(len(self.triangles)), np.repeat(pts[n : n + 1], len(self.triangles), 0))
            j = int(np.argmax(lam.min(axis=1)))
            if lam[j].min() < -tol:
                raise ValueError(f"point {pts[n].tolist()} lies outside the mesh")
            tri[n], bary[n] = j, lam[j]
        return tri, bary

    def vertex_index(self, points, tol: float = 1e-12) -> np.ndarray:
        """Indices of mesh vertices that coincide with the given points."""
        d, idx = cKDTree(self.vertices).query(np.atleast_2d(points))
        if np.any(d > tol * max(1.0, self.A)):
            raise ValueError("some points are not mesh vertices")
        return idx

    def export(self, path) -> None:
        """Write the plain-text node/element format described in the README."""
        lines = ["# roughscat mesh v1", f"vertices {self.n_vertices}"]
        lines += [f"{x:.17g} {y:.17g}" for x, y in self.vertices]
        lines.append(f"triangles {len(self.triangles)}")
        lines += [f"{a} {b} {c} {r}" for (a, b, c), r in zip(self.triangles, self.regions)]
        lines.append(f"edges {len(self.edges)}")
        lines += [f"{a} {b} {TAG_NAMES[int(t)]}" for (a, b), t in zip(self.edges, self.edge_tags)]
        Path(path).write_text("\n".join(lines) + "\n")


def _cumulative_positions(length_density, n_min: int):
    """Invert a cumulative density to obtain integer-spaced sample positions."""
    s, dens = length_density
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    n = max(int(math.ceil(cum[-1] - 1e-9)), n_min)
    levels = np.linspace(0.0, cum[-1], n + 1)
    pos = np.interp(levels, cum, s)
    pos[0], pos[-1] = s[0], s[-1]
    return pos


def _constant_size(h_mesh):
    return lambda p: np.full(len(p), h_mesh)


def generate_mesh(domain: StripDomain, h_mesh: float, points: Optional[Sequence] = None,
                  size: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  min_angle: float = 30.0) -> Mesh:
    """Triangulate the strip conforming to the interface and the obstacle.

    Parameters
    ----------
    domain : StripDomain
    h_mesh : float
        Target edge length; ``x2 = +-h`` get ``N`` uniform intervals where
        ``N`` is the smallest power of two with ``2A/N <= h_mesh``.
    points : sequence of points, optional
        Extra vertices to embed (receivers, sources).
    size : callable, optional
        Local target edge length ``size(points) -> array``, capped by
        ``h_mesh``.  Used for graded meshes.
    """
    if h_mesh <= 0:
        raise MeshError("h_mesh must be positive")
    A, h, itf, obs = domain.A, domain.h, domain.interface, domain.obstacle
    if obs is not None and h_mesh > obs.diameter:
        raise MeshError(f"h_mesh={h_mesh} exceeds the obstacle diameter {obs.diameter:.4g}; refine the mesh")
    base = _constant_size(h_mesh)
    if size is None:
        sz = base
    else:
        sz = lambda p: np.minimum(np.asarray(size(p), float), h_mesh)

    n_int = 1 << max(2, math.ceil(math.log2(2.0 * A / h_mesh - 1e-9)))
    xs = np.linspace(-A, A, n_int + 1)

    verts: list[np.ndarray] = []
    segs: list[np.ndarray] = []
    marks: list[np.ndarray] = []

    def add_chain(pts, tag, closed=False):
        start = sum(len(v) for v in verts)
        verts.append(np.asarray(pts, float))
        n = len(pts)
        idx = np.arange(start, start + n)
        s = np.column_stack([idx[:-1], idx[1:]])
        if closed:
            s = np.vstack([s, [idx[-1], idx[0]]])
        segs.append(s)
        marks.append(np.full(len(s), tag))
        return idx

    fl, fr = float(itf.f(np.array(-A))), float(itf.f(np.array(A)))
    top = add_chain(np.column_stack([xs, np.full_like(xs, h)]), TAG_TOP)
    bot = add_chain(np.column_stack([xs, np.full_like(xs, -h)]), TAG_BOTTOM)

    s = np.linspace(-A, A, 32769)
    dens = np.sqrt(1.0 + itf.df(s) ** 2) / sz(np.column_stack([s, itf.f(s)]))
    xi = _cumulative_positions((s, dens), 4)
    itf_idx = add_chain(np.column_stack([xi, itf.f(xi)]), TAG_INTERFACE)

    def wall(x, y0, y1):
        n = max(2, math.ceil(abs(y1 - y0) / h_mesh))
        ys = np.linspace(y0, y1, n + 1)[1:-1]
        return np.column_stack([np.full_like(ys, x), ys])

    # walls: corner/interface vertices already exist, only interior wall nodes are new
    for x, yf, c_top, c_bot, c_itf in ((-A, fl, top[0], bot[0], itf_idx[0]), (A, fr, top[-1], bot[-1], itf_idx[-1])):
        for y0, y1, a, b in ((-h, yf, c_bot, c_itf), (yf, h, c_itf, c_top)):
            inner = wall(x, y0, y1)
            if len(inner):
                idx = add_chain(inner, TAG_WALL)
                chain = np.concatenate([[a], idx, [b]])
                segs[-1] = np.column_stack([chain[:-1], chain[1:]])
                marks[-1] = np.full(len(chain) - 1, TAG_WALL)
            else:
                segs.append(np.array([[a, b]]))
                marks.append(np.array([TAG_WALL]))

    holes = []
    if obs is not None:
        t = np.linspace(0.0, 1.0, 16385)
        dens = np.linalg.norm(obs.derivative(t), axis=-1) / sz(obs.point(t))
        tb = list(_cumulative_positions((t, dens), 16))[:-1]
        for br in obs.partition_breaks():
            if np.min(np.abs(np.asarray(tb) - br)) > 1e-9:
                tb.append(br)
        tb = np.array(sorted(tb))
        idx = add_chain(obs.point(tb), TAG_SOFT, closed=True)
        tmid = np.concatenate([0.5 * (tb[:-1] + tb[1:]), [0.5 * (tb[-1] + 1.0)]])
        marks[-1] = np.where(obs.is_coated(tmid), TAG_COATED, TAG_SOFT)
        holes.append(list(obs.center))

    if points is not None and len(points):
        pts = np.atleast_2d(np.asarray(points, float))
        reg = domain.region_of(pts)
        if np.any(reg == 0):
            raise MeshError("embedded points must lie inside the computational domain")
        verts.append(pts)

    V = np.vstack(verts)
    S = np.vstack(segs)
    M = np.concatenate(marks)
    eps = 0.25 * min(h_mesh, A / 16)
    x0 = -A + eps
    regions = [[x0, 0.5 * (float(itf.f(np.array(x0))) + h), REGION_UPPER, 0.0],
               [x0, 0.5 * (float(itf.f(np.array(x0))) - h), REGION_LOWER, 0.0]]
    pslg = {"vertices": V, "segments": S, "segment_markers": M, "regions": regions}
    if holes:
        pslg["holes"] = holes
    area = math.sqrt(3.0) / 4.0 * h_mesh**2
    opts = f"pq{min_angle:g}YAa{area:.12f}"
    try:
        out = triangle.triangulate(pslg, opts)
        if size is not None:
            for _ in range(12):
                p = out["vertices"][out["triangles"]]
                cen = p.mean(axis=1)
                e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
                ar = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
                want = math.sqrt(3.0) / 4.0 * sz(cen) ** 2
                if np.all(ar <= 1.3 * want):
                    break
                out = dict(out)
                out["triangle_max_area"] = np.minimum(want, ar)
                if holes:
                    out["holes"] = holes
                out = triangle.triangulate(out, f"rpq{min_angle:g}YAa")
    except Exception as exc:  # pragma: no cover - triangle raises bare errors
        raise MeshError(f"triangulation failed: {exc}") from exc

    vertices = out["vertices"]
    tris = out["triangles"].astype(np.int64)
    regs = out["triangle_attributes"][:, 0].astype(np.int64)
    edges = out["segments"].astype(np.int64)
    tags = out["segment_markers"].ravel().astype(np.int64)

    p = vertices[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    sa = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    flip = sa < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    if np.any(np.abs(sa) <= 1e-14 * h_mesh**2):
        raise MeshError("degenerate triangle produced (check interface and obstacle sampling)")
    if not set(np.unique(regs)) <= {REGION_UPPER, REGION_LOWER}:
        raise MeshError("region tagging failed; the interface may not separate the strip")

    def line_nodes(y):
        n = np.nonzero(vertices[:, 1] == y)[0]
        return n[np.argsort(vertices[n, 0])]

    top_nodes, bot_nodes = line_nodes(h), line_nodes(-h)
    for name, nodes in (("top", top_nodes), ("bottom", bot_nodes)):
        if len(nodes) != n_int + 1 or not np.allclose(vertices[nodes, 0], xs, rtol=0, atol=1e-12 * A):
            raise MeshError(f"{name} boundary lost its uniform FFT grid during meshing")
    if np.any(tags == 0):
        raise MeshError("an edge lost its boundary tag")
    return Mesh(vertices, tris, regs, edges, tags, top_nodes, bot_nodes, float(h_mesh), A, h)
