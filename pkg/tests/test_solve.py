import json

import numpy as np
import pytest

from roughscat import geometry as geo
from roughscat.assembly import DiskIndicator, rhs_local_source, rhs_point_source
from roughscat.experiments import Scene, standard_scene_config
from roughscat.fields import h1_norm_nodal
from roughscat.solve import (ENERGY_TOL, Factorization, Regime, RegimeError, SolverError, WaveNumbers,
                             absorbing_shift_solve, energy_balance, solve_system, validate_regime)
from roughscat.special import PointSource

CIRCLE = {"center": [0.0, -1.2], "radius": 0.4}


def obstacle(label):
    return geo.make_obstacle("circle", CIRCLE, [{"start": 0.0, "end": 1.0, "label": label}], beta=1.0)


def test_regime_examples():
    assert validate_regime(WaveNumbers(4, 2 + 0.5j), obstacle("soft")) is Regime.LOSSY_LOWER
    assert validate_regime(WaveNumbers(4, 2), obstacle("coated")) is Regime.REAL_CONTRAST
    with pytest.raises(RegimeError, match="uniqueness"):
        validate_regime(WaveNumbers(4, 2), obstacle("soft"))


@pytest.mark.parametrize("k1, k2", [(4 + 0.1j, 2), (4, 2 - 0.1j), (4, 4), (4, 4 + 0j), (-1, 2), (4, -2 + 1j)])
def test_regime_rejections(k1, k2):
    with pytest.raises(RegimeError):
        validate_regime(WaveNumbers(k1, k2), obstacle("coated"))


def test_regime_no_obstacle_and_homogeneous():
    assert validate_regime(WaveNumbers(4, 2)) is Regime.REAL_CONTRAST
    assert validate_regime(WaveNumbers(4, 4)) is Regime.HOMOGENEOUS
    with pytest.raises(RegimeError, match="non-trap"):
        validate_regime(WaveNumbers(4, 4 + 0.5j), obstacle("soft"))
    with pytest.raises(RegimeError):
        validate_regime(WaveNumbers(2, 2), obstacle("coated"))
    zero_beta = geo.make_obstacle("circle", CIRCLE, None, beta=0.0)
    with pytest.raises(RegimeError):
        validate_regime(WaveNumbers(4, 2), zero_beta)


def test_zero_rhs_gives_zero(standard_scene):
    rep = standard_scene.local_source(None)
    assert not rep.solution.coefficients.any() and rep.residual == 0


def test_linearity(standard_scene):
    g = DiskIndicator((0.3, 0.8), 0.3, 1.0 + 0.5j)
    r1 = standard_scene.local_source(g)
    r2 = standard_scene.local_source(DiskIndicator((0.3, 0.8), 0.3, 2.0 + 1.0j))
    u1, u2 = r1.solution.coefficients, r2.solution.coefficients
    assert np.linalg.norm(u2 - 2 * u1) <= 1e-10 * np.linalg.norm(u2)


def test_residual_and_energy(standard_scene):
    rep = standard_scene.point_source((0.0, 1.0))
    assert rep.residual <= 1e-10 and rep.energy_defect <= ENERGY_TOL
    e = rep.energy
    assert e.absorption == pytest.approx(0, abs=1e-12 * abs(e.source))  # lossless lower medium
    assert e.impedance > 0 and e.top > 0 and e.bottom > 0 and e.layer > 0
    log = json.loads(rep.to_log())
    assert log["regime"] == "RealContrast" and "energy" in log


def test_energy_lossy_absorption_positive():
    sc = Scene(standard_scene_config(0.25, k2_sq={"re": 2.0, "im": 0.5}))
    rep = sc.point_source((0.0, 1.0))
    assert rep.energy.absorption > 0 and rep.energy_defect <= ENERGY_TOL
    b = sc.system.restrict(rhs_point_source(sc.mesh, sc.domain, PointSource((0.0, 1.0), "psw", 4.0)).values)
    bal = energy_balance(sc.system, sc.system.restrict(rep.solution.coefficients), b)
    assert bal.defect == pytest.approx(rep.energy_defect, abs=1e-14)


def test_uniqueness_proxy_two_orderings(standard_scene):
    rhs = rhs_point_source(standard_scene.mesh, standard_scene.domain, PointSource((0.5, 1.0), "psw", 4.0))
    a = Factorization(standard_scene.system, "COLAMD").solve(rhs).solution.coefficients
    b = Factorization(standard_scene.system, "MMD_AT_PLUS_A").solve(rhs).solution.coefficients
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(a)


def test_discrete_reciprocity(standard_scene, rng):
    sysm, fac = standard_scene.system, standard_scene.factorization
    n = sysm.shape[0]
    b1 = rng.normal(size=n) + 1j * rng.normal(size=n)
    b2 = rng.normal(size=n) + 1j * rng.normal(size=n)
    u1, _ = fac.solve_free(b1)
    u2, _ = fac.solve_free(b2)
    assert abs(b2 @ u1 - b1 @ u2) <= 1e-10 * abs(b2 @ u1)


def test_a_priori_ratio_bounded_and_stable(rng):
    ratios = []
    centers = np.column_stack([rng.uniform(-2.5, 2.5, 20), rng.uniform(-0.6, 1.4, 20)])
    for h in (0.3, 0.15):
        sc = Scene(standard_scene_config(h))
        r = []
        for c in centers:
            if sc.domain.distance_to_obstacle(c[None])[0] < 0.35 or abs(c[1] - sc.domain.interface.f(c[0])) < 0.05:
                c = c + [0.0, 0.7]
            rep = sc.local_source(DiskIndicator(tuple(c), 0.25, rng.normal() + 1j * rng.normal()))
            r.append(rep.estimate_ratio)
        ratios.append(np.array(r))
    for r in ratios:
        assert np.all(np.isfinite(r)) and r.max() / r.min() < 100
    spread = [r.max() / r.min() for r in ratios]
    assert spread[1] < 2 * spread[0] and spread[0] < 2 * spread[1]


def test_tolerance_failure_raises(standard_scene):
    rhs = rhs_point_source(standard_scene.mesh, standard_scene.domain, PointSource((0.5, 1.0), "psw", 4.0))
    with pytest.raises(SolverError):
        solve_system(standard_scene.system, rhs, tol=1e-30)


def test_absorbing_shift_convergence_and_energy(standard_scene):
    rhs = rhs_point_source(standard_scene.mesh, standard_scene.domain, PointSource((0.0, 1.0), "psw", 4.0))
    u0 = standard_scene.factorization.solve(rhs).solution.coefficients
    drift = []
    for a in (1e-2, 1e-3, 1e-4):
        rep = absorbing_shift_solve(standard_scene.system, rhs, a, thickness=0.2)
        assert rep.energy.shift > 0 and rep.energy_defect <= ENERGY_TOL
        drift.append(np.linalg.norm(rep.solution.coefficients - u0) / np.linalg.norm(u0))
    assert drift[0] > drift[1] > drift[2]
    assert np.all(np.abs(np.log10(np.array(drift[:-1]) / np.array(drift[1:])) - 1.0) < 0.2)


def test_absorbing_shift_requires_real_contrast():
    sc = Scene(standard_scene_config(0.3, k2_sq={"re": 2.0, "im": 0.5}))
    rhs = rhs_local_source(sc.mesh, sc.domain, DiskIndicator((0.0, 1.0), 0.3))
    with pytest.raises(RegimeError):
        absorbing_shift_solve(sc.system, rhs, 1e-2)


def test_estimate_ratio_matches_norm(standard_scene):
    g = DiskIndicator((0.3, 0.8), 0.3, 1.0)
    rep = standard_scene.local_source(g)
    n = h1_norm_nodal(standard_scene.mesh, rep.solution.coefficients, standard_scene.domain)
    assert rep.estimate_ratio == pytest.approx(n / g.l2_norm, rel=1e-12)
