import numpy as np
import pytest

from roughscat import experiments as ex
from roughscat import geometry as geo
from roughscat.oracle_flat import TwoLayerReference, reference_field

from conftest import DESK


def test_flat_reciprocity_matches_analytic(flat_scene):
    pairs = [((-1.0, 1.0), (1.2, 0.9)), ((0.0, 1.0), (0.5, 1.6))]
    sc = ex.Scene(flat_scene.config, points=np.vstack([np.array(p) for p in pairs]))
    res = ex.run_reciprocity(sc, pairs)
    for r in res.rows:
        ref = reference_field(TwoLayerReference(4.0, 2.0, tuple(r["z1"])), np.array(r["z2"]), "total")
        ref2 = reference_field(TwoLayerReference(4.0, 2.0, tuple(r["z2"])), np.array(r["z1"]), "total")
        assert abs(ref - ref2) <= 1e-6 * abs(ref)
        assert abs(r["u12"] - ref) <= 0.05 * abs(ref)
    assert res.max_defect <= 2e-2


def test_reciprocity_rejections(standard_scene):
    with pytest.raises(ValueError, match="differ"):
        ex.run_reciprocity(standard_scene, [((0.0, 1.0), (0.0, 1.0))])
    with pytest.raises(ValueError):
        ex.run_reciprocity(standard_scene, [((0.0, 1.0), (0.1, 1.0))])


def test_random_pairs_respect_margins(standard_scene, rng):
    pairs = ex.random_pairs(standard_scene.domain, 5, rng)
    for a, b in pairs:
        assert np.hypot(*(np.subtract(a, b))) >= 1.0
        for p in (a, b):
            assert standard_scene.domain.distance_to_interface(np.array(p)[None])[0] >= 0.9
            assert p[1] <= standard_scene.domain.h - 0.4


def test_hspsw_rejections(standard_scene):
    with pytest.raises(ValueError):
        ex.run_hspsw_consistency(standard_scene, (0.0, 1.0), [0.1, 0.0])
    with pytest.raises(ValueError):
        ex.run_hspsw_consistency(standard_scene, (0.0, 1.0), [0.1])
    with pytest.raises(ValueError):
        ex.run_hspsw_consistency(standard_scene, (0.0, 0.6), [1.0, 0.5])


def test_hspsw_no_contrast_scene():
    cfg = ex.flat_scene_config(4.0, 0.2, A=8.0)
    sc = ex.Scene(cfg, points=[(0.0, 1.0)])
    assert sc.system is not None and sc.regime.value == "Homogeneous"
    res = ex.run_hspsw_consistency(sc, (0.0, 1.0), [0.2, 0.1, 0.05])
    assert res.slope >= 0.9 and not res.floor_flags.any()


def test_monotone_growth():
    assert ex.monotone_growth(np.arange(1, 21, dtype=float))
    assert not ex.monotone_growth(2.0 - 1.0 / np.arange(1, 21) ** 2)
    assert not ex.monotone_growth(np.r_[np.ones(15), [1, 2, 1, 3, 4]])
    with pytest.raises(ValueError):
        ex.monotone_growth([1.0, 2.0])


def test_annulus_norm_grows_towards_source():
    z = np.array([0.0, 1.0])
    a = [ex.annulus_h1_norm(2.0, z, r, 2 * r) for r in (0.1, 0.01, 0.001)]
    assert a[0] < a[1] < a[2]
    # dipole: |grad| ~ 1 / r^2 gives an H1 norm ~ 1 / r over a dyadic annulus
    assert a[2] / a[1] == pytest.approx(10.0, rel=0.05)


def test_approach_rejects_k_in_ball():
    cfg = ex.standard_scene_config(0.3)
    with pytest.raises(ValueError, match="ball"):
        ex.run_source_approach(cfg, np.pi / 2, j_max=5, k_center=(np.pi / 2 + 0.2, 0.3))


def test_measurement_geometry_validation(standard_scene):
    dom = standard_scene.domain
    ex.MeasurementGeometry(1.0, 1.5, (-2, 2), (-2, 2), 2, 3).validate(dom)
    bad = [ex.MeasurementGeometry(0.1, 1.5, (-2, 2), (-2, 2), 2, 3),
           ex.MeasurementGeometry(1.5, 1.0, (-2, 2), (-2, 2), 2, 3),
           ex.MeasurementGeometry(1.0, 1.5, (-5, 2), (-2, 2), 2, 3),
           ex.MeasurementGeometry(2.0, 2.0, (-2, 2), (-2, 2), 2, 3),
           ex.MeasurementGeometry(1.0, 1.5, (-2, 2), (-2, 2), 0, 3)]
    for g in bad:
        with pytest.raises(ValueError):
            g.validate(dom)


def test_dataset_shape_metadata_roundtrip(tmp_path):
    cfg = ex.standard_scene_config(0.3)
    geom = ex.MeasurementGeometry(1.0, 1.5, (-1, 1), (-1.5, 1.5), 2, 3)
    ds = ex.generate_dataset(cfg, geom, tmp_path / "d.csv")
    assert ds.shape == (3, 2) and np.all(np.isfinite(ds.values))
    for key in ("format", "config_hash", "field", "k1_sq", "k2_sq", "h_mesh", "n_sources", "n_receivers"):
        assert key in ds.metadata
    assert ds.metadata["config_hash"] == cfg.fingerprint()
    back = ex.read_dataset(tmp_path / "d.csv")
    assert np.array_equal(back.values, ds.values) and back.metadata == ds.metadata
    with pytest.raises(ValueError):
        ex.generate_dataset(cfg, geom, store="incident")


@pytest.mark.parametrize("h_mesh, pointwise", [(DESK, False), (DESK / 1.5, True)])
def test_dataset_mirror_symmetry(h_mesh, pointwise):
    cfg = ex.standard_scene_config(
        h_mesh, profile={"family": "gaussian_bump", "params": {"amplitude": 0.3, "width": 2.0}},
        obstacle={"curve": "circle", "params": {"center": [0.0, -1.0], "radius": 0.4},
                  "partition": [{"start": 0.0, "end": 1.0, "label": "coated"}], "beta": 1.0})
    geom = ex.MeasurementGeometry(1.0, 1.5, (-2, 2), (-2, 2), 5, 5)
    U = ex.generate_dataset(cfg, geom).values
    D = U - U[::-1, ::-1]
    if pointwise:
        assert np.max(np.abs(D) / np.abs(U)) <= 1e-2
    else:
        assert np.linalg.norm(D) <= 1e-2 * np.linalg.norm(U)


def test_dataset_reciprocity_spot_check():
    geom = ex.MeasurementGeometry(1.0, 1.0, (-2, 2), (-2, 2), 3, 3)
    ds = ex.generate_dataset(ex.standard_scene_config(DESK), geom)
    assert int(ds.metadata["reciprocity_pairs"]) == 3
    assert float(ds.metadata["reciprocity_max_defect"]) <= 2e-2


@pytest.mark.parametrize("h_mesh, pointwise", [(DESK, False), (DESK / 1.5, True)])
def test_dataset_flat_matches_oracle(h_mesh, pointwise):
    cfg = ex.flat_scene_config(2.0, h_mesh, A=16.0)
    geom = ex.MeasurementGeometry(1.0, 1.5, (-1, 1), (-2, 2), 2, 5)
    ds = ex.generate_dataset(cfg, geom)
    for j, z in enumerate(ds.sources):
        ref = reference_field(TwoLayerReference(4.0, 2.0, tuple(z)), ds.receivers)
        err = ds.values[:, j] - ref
        if pointwise:
            assert np.max(np.abs(err) / np.abs(ref)) <= 1e-2
        else:
            assert np.linalg.norm(err) <= 1e-2 * np.linalg.norm(ref)


def test_dataset_deterministic(tmp_path):
    cfg = ex.standard_scene_config(0.3)
    geom = ex.MeasurementGeometry(1.0, 1.5, (-1, 1), (-1, 1), 2, 3)
    ex.generate_dataset(cfg, geom, tmp_path / "a.csv")
    ex.generate_dataset(cfg, geom, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_convergence_ladder_preconditions():
    cfg = ex.flat_scene_config(2.0 + 0.5j, 0.2, A=8.0)
    with pytest.raises(ValueError, match="three"):
        ex.run_convergence(cfg, "h_mesh", [0.2])
    with pytest.raises(ValueError, match="monotone"):
        ex.run_convergence(cfg, "h_mesh", [0.2, 0.1, 0.15])
    with pytest.raises(ValueError):
        ex.run_convergence(cfg, "bogus", [1, 2, 3])


def test_observed_orders():
    h = np.array([0.2, 0.1, 0.05])
    assert np.allclose(ex.observed_orders(h, 3 * h**2), 2.0)


def test_a_ladder_without_layer_decreases():
    cfg = ex.standard_scene_config(0.2, layer=None)
    rep = ex.run_convergence(cfg, "A", [8.0, 16.0, 32.0])
    assert rep.errors[1] < rep.errors[0]


def test_xi_ladder_decreases():
    rep = ex.run_convergence(ex.flat_scene_config(2.0), "Xi", [8.0, 16.0, 32.0])
    assert rep.errors[1] < rep.errors[0] and rep.errors[1] < 1e-3


def test_delta_ladder_small_drift():
    cfg = ex.flat_scene_config(2.0, 0.1, A=8.0)
    rep = ex.run_convergence(cfg, "delta", [0.2, 0.3, 0.4])
    assert np.all(rep.errors <= 1e-2)
