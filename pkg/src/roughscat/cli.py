"""Command-line interface.

Every subcommand writes CSV/JSON results under ``--out`` and exits with
status 0 iff its asserted tolerances pass.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .assembly import dump_matrix
from .fields import eval_in_strip, write_field_csv
from .geometry import SceneConfig
from .oracle_flat import TwoLayerReference, reference_field

log = logging.getLogger("roughscat")


def _load_config(args) -> SceneConfig:
    if args.config is None:
        return ex.standard_scene_config()
    return SceneConfig.from_json(args.config)


def _settings(cfg: SceneConfig, name: str) -> dict:
    return dict(cfg.extra.get(name, {}))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _verdict(name: str, ok: bool, detail: str) -> int:
    print(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return 0 if ok else 1


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "solve")
    z = tuple(args.source or s.get("source", (0.0, 1.0)))
    kind = args.kind or s.get("kind", "psw")
    scene = ex.Scene(cfg, h_mesh=args.mesh_h, points=[z])
    rep = scene.point_source(z, kind)
    out = _out_dir(args)
    mesh = scene.mesh
    write_field_csv(out / "field_nodes.csv", mesh.vertices,
                    eval_in_strip(rep.solution, mesh.vertices, "smoothed"), "smoothed")
    c = float(s.get("receiver_height", 0.5 * (cfg.h + scene.domain.interface.f_plus)))
    half = 0.5 * scene.domain.physical_half_width
    rcv = np.column_stack([np.linspace(-half, half, int(s.get("n_receivers", 65))), np.full(int(s.get("n_receivers", 65)), c)])
    write_field_csv(out / "receiver_line.csv", rcv, eval_in_strip(rep.solution, rcv, "scattered"), "scattered")
    mesh.export(out / "mesh.txt")
    if args.dump_matrix:
        dump_matrix(scene.system, out / "matrix.txt")
    (out / "solve_log.json").write_text(rep.to_log() + "\n")
    tol = args.tol if args.tol is not None else 1e-10
    return _verdict("solve", rep.energy_defect <= tol and rep.residual <= tol,
                    f"residual {rep.residual:.2e}, energy defect {rep.energy_defect:.2e}")


def cmd_reciprocity(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "reciprocity")
    rng = np.random.default_rng(int(s.get("seed", args.seed)))
    dom = ex.geo.build_scene(cfg)
    pairs = ex.random_pairs(dom, int(s.get("pairs", args.pairs)), rng, float(s.get("margin", 0.9)),
                            float(s.get("min_separation", 1.0)))
    pts = np.vstack([np.array(p) for p in pairs])
    scene = ex.Scene(cfg, h_mesh=args.mesh_h, points=pts)
    res = ex.run_reciprocity(scene, pairs)
    out = _out_dir(args)
    with open(out / "reciprocity.csv", "w") as fh:
        fh.write("z1_x1,z1_x2,z2_x1,z2_x2,u12_re,u12_im,u21_re,u21_im,defect\n")
        for r in res.rows:
            vals = [*r["z1"], *r["z2"], r["u12"].real, r["u12"].imag, r["u21"].real, r["u21"].imag, r["defect"]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    tol = args.tol if args.tol is not None else 2e-2
    return _verdict("reciprocity", res.max_defect <= tol, f"max defect {res.max_defect:.3e}, tol {tol:.1e}")


def cmd_hspsw(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "hspsw")
    z = np.asarray(args.source or s.get("source", (0.0, 1.0)), float)
    eps = args.eps or s.get("epsilons", [0.2, 0.1, 0.05])
    scene = ex.Scene(cfg, h_mesh=args.mesh_h, points=[z])
    res = ex.run_hspsw_consistency(scene, z, eps)
    out = _out_dir(args)
    with open(out / "hspsw.csv", "w") as fh:
        fh.write("epsilon,error,relative_error,floor\n")
        for e, er, rl, fl in zip(res.epsilons, res.errors, res.relative, res.floor_flags):
            fh.write(f"{e!r},{er!r},{rl!r},{int(fl)}\n")
    tol = args.tol if args.tol is not None else 0.9
    return _verdict("hspsw", bool(res.slope >= tol), f"slope {res.slope:.3f}, minimum {tol:.2f}")


def cmd_approach(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "approach")
    res = ex.run_source_approach(cfg, float(s.get("x_star", args.x_star)), int(s.get("j_max", args.j_max)),
                                 float(s.get("delta", 0.4)), float(s.get("distance", 1.0)),
                                 float(s.get("side", 1.0)), s.get("kind", "hspsw"), h_mesh=args.mesh_h)
    out = _out_dir(args)
    with open(out / "approach.csv", "w") as fh:
        fh.write("j,z_x1,z_x2,norm_total,norm_scattered,control\n")
        for j, p, a, b, c in zip(res.j, res.points, res.norms_total, res.norms_scattered, res.control):
            fh.write(f"{j},{p[0]!r},{p[1]!r},{a!r},{b!r},{c!r}\n")
    tol = args.tol if args.tol is not None else 10.0
    ok = res.max_over_median <= tol and not res.monotone_tail and res.control_growth >= 10.0
    return _verdict("approach", ok, f"max/median {res.max_over_median:.3f}, monotone tail {res.monotone_tail}, "
                    f"control growth {res.control_growth:.1f}")


def cmd_dataset(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "measurement")
    half = 0.25 * cfg.A
    geom = ex.MeasurementGeometry(
        b=float(s.get("b", 1.0)), c=float(s.get("c", 1.5)),
        source_range=tuple(s.get("source_range", (-half, half))),
        receiver_range=tuple(s.get("receiver_range", (-half, half))),
        n_sources=int(s.get("n_sources", 5)), n_receivers=int(s.get("n_receivers", 9)))
    out = _out_dir(args)
    ds = ex.generate_dataset(cfg, geom, out / "dataset.csv", store=s.get("store", "scattered"),
                             h_mesh=args.mesh_h)
    md = ds.metadata["reciprocity_max_defect"]
    if md == "none":
        return _verdict("dataset", True, f"{ds.shape[1]} sources x {ds.shape[0]} receivers")
    tol = args.tol if args.tol is not None else 2e-2
    return _verdict("dataset", float(md) <= tol, f"reciprocity spot-check {float(md):.3e}, tol {tol:.1e}")


def cmd_converge(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "converge")
    param = args.param or s.get("parameter", "h_mesh")
    ladder = args.ladder or s.get("ladder", [0.2, 0.1, 0.05])
    rep = ex.run_convergence(cfg, param, ladder, mms=s.get("mms"))
    out = _out_dir(args)
    with open(out / f"converge_{param}.csv", "w") as fh:
        fh.write(f"{param},error\n")
        for p, e in zip(rep.ladder[-len(rep.errors):], rep.errors):
            fh.write(f"{p!r},{e!r}\n")
    if param == "h_mesh":
        tol = args.tol if args.tol is not None else 0.2
        ok = bool(np.all(np.abs(rep.orders - 2.0) <= tol))
        return _verdict("converge", ok, f"orders {np.round(rep.orders, 3).tolist()}, 2 +- {tol}")
    ok = bool(np.all(np.diff(rep.errors) < 0))
    return _verdict("converge", ok, f"drifts {[f'{e:.2e}' for e in rep.errors]} decreasing")


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    s = _settings(cfg, "oracle")
    z = tuple(args.source or s.get("source", (0.0, 1.0)))
    c = float(s.get("height", 1.5))
    half = float(s.get("half_width", 0.5 * cfg.A))
    n = int(s.get("samples", 65))
    x = np.column_stack([np.linspace(-half, half, n), np.full(n, c)])
    ref = TwoLayerReference(cfg.k1_sq, cfg.k2_sq, z)
    fine = TwoLayerReference(cfg.k1_sq, cfg.k2_sq, z, panels=2 * ref.panels)
    u, u2 = reference_field(ref, x), reference_field(fine, x)
    out = _out_dir(args)
    write_field_csv(out / "oracle.csv", x, u, "scattered")
    drift = float(np.max(np.abs(u - u2)) / np.max(np.abs(u2)))
    tol = args.tol if args.tol is not None else 1e-10
    return _verdict("oracle", drift <= tol, f"panel-doubling drift {drift:.2e}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughscat", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="scene configuration (JSON)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--mesh-h", type=float, default=None, help="override the mesh size")
        sp.add_argument("--tol", type=float, default=None, help="override the asserted tolerance")
        return sp

    sp = common(sub.add_parser("solve", help="single point-source solve"))
    sp.add_argument("--source", type=float, nargs=2)
    sp.add_argument("--kind", choices=["psw", "hspsw"])
    sp.add_argument("--dump-matrix", action="store_true")
    sp.set_defaults(func=cmd_solve)

    sp = common(sub.add_parser("reciprocity", help="source/receiver exchange test"))
    sp.add_argument("--pairs", type=int, default=5)
    sp.add_argument("--seed", type=int, default=2024)
    sp.set_defaults(func=cmd_reciprocity)

    sp = common(sub.add_parser("hspsw", help="dipole source versus finite differences"))
    sp.add_argument("--source", type=float, nargs=2)
    sp.add_argument("--eps", type=float, nargs="+")
    sp.set_defaults(func=cmd_hspsw)

    sp = common(sub.add_parser("approach", help="sources approaching the interface"))
    sp.add_argument("--x-star", type=float, default=float(np.pi / 2))
    sp.add_argument("--j-max", type=int, default=20)
    sp.set_defaults(func=cmd_approach)

    sp = common(sub.add_parser("dataset", help="multistatic scattered-field dataset"))
    sp.set_defaults(func=cmd_dataset)

    sp = common(sub.add_parser("converge", help="convergence ladder"))
    sp.add_argument("--param", choices=["h_mesh", "A", "delta", "Xi"])
    sp.add_argument("--ladder", type=float, nargs="+")
    sp.set_defaults(func=cmd_converge)

    sp = common(sub.add_parser("oracle", help="flat two-layer reference slice"))
    sp.add_argument("--source", type=float, nargs=2)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"{args.command}: ERROR ({exc})", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
