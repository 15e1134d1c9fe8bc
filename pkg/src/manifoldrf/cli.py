"""Command-line experiment drivers.

Subcommands reproduce each study at a configurable scale; ``--scale desk``
bundles reduced budgets with the same protocol shape as ``--scale paper``.
Every run writes a manifest echoing the resolved configuration, result CSVs
with lossless float formatting, and wall-clock timings in separate files so
that seeded reruns are byte-identical on the result artifacts.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from manifoldrf.experiments import (
    gaussian_convergence,
    manifold_surrogate,
    mesh_experiments,
    selfcheck,
)
from manifoldrf.experiments.common import parse_config_file, resolve_config


def _add_common(parser):
    parser.add_argument("--seed", type=int, help="experiment seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="walker thread count (results are identical for any value)")
    parser.add_argument("--scale", choices=["desk", "paper"], default="desk")
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--config", default=None, help="flat key=value file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")


def _collect_overrides(args, mapping):
    """First-class flags plus --set pairs, later entries winning."""
    out = {}
    for key, attr in mapping.items():
        val = getattr(args, attr, None)
        if val is not None:
            out[key] = val
    if args.seed is not None:
        out["seed"] = args.seed
    for item in args.overrides:
        if "=" not in item:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        out[key.strip()] = val.strip()
    return out


def _resolve(args, cls, desk, paper, mapping):
    preset = desk if args.scale == "desk" else paper
    file_values = parse_config_file(args.config) if args.config else None
    overrides = _collect_overrides(args, mapping)
    return resolve_config(cls, preset=preset, file_values=file_values,
                          overrides=overrides)


def _setup_threads(args):
    try:
        import numba

        numba.set_num_threads(max(1, args.threads))
    except (ImportError, ValueError):
        pass


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="manifoldrf",
        description="graph random features, kernel surrogates, and mesh interpolation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gaussian-convergence",
                       help="grid signature convergence to the Gaussian kernel")
    _add_common(p)
    p.add_argument("--p-halt", dest="p_halt", type=float)
    p.add_argument("--walks", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--dims", type=str, help="comma-separated dimensions")
    p.add_argument("--n-ladder", dest="n_ladder", type=str,
                   help="comma-separated grid sides")

    p = sub.add_parser("manifold-surrogate",
                       help="kernel surrogate study on a synthetic surface")
    _add_common(p)
    p.add_argument("--surface", choices=["sphere", "ellipsoid", "mobius", "torus"])
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--walks", type=int)
    p.add_argument("--p-halt", dest="p_halt", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--ground-truth", dest="ground_truth",
                   choices=["spectral", "analytic"])
    p.add_argument("--t-analytical", dest="t_analytical", type=float)

    for task in ("mesh-normals", "mesh-velocity"):
        p = sub.add_parser(task, help=f"{task.split('-')[1]} interpolation ladder")
        _add_common(p)
        p.add_argument("--mesh", dest="mesh_path")
        p.add_argument("--mesh-kind", dest="mesh_kind",
                       choices=["torus", "cloth", "obj"])
        p.add_argument("--mask-frac", dest="mask_fraction", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--method", dest="methods", choices=["fk", "mrf", "both"])
        p.add_argument("--sizes", type=str, help="comma-separated vertex counts")
        p.add_argument("--n-dense", dest="n_dense", type=int,
                       help="normals: densified training-cloud floor; "
                            "velocity: single ladder size")
        p.add_argument("--n-rf", dest="n_rf", type=int)
        p.add_argument("--walks", type=int)

    p = sub.add_parser("selfcheck", help="numerical checks of the oracle layer")
    _add_common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--lmax", type=int)
    p.add_argument("--kmax", type=int)

    p = sub.add_parser("grf-dump", help="run the walker and dump signatures")
    _add_common(p)
    p.add_argument("--graph", dest="graph_path")
    p.add_argument("--grid-n", dest="grid_n", type=int, default=15)
    p.add_argument("--grid-d", dest="grid_d", type=int, default=1)
    p.add_argument("--sigma", type=float, default=0.2,
                   help="grid diffusion scale (grid graphs)")
    p.add_argument("--tau", type=float,
                   help="half-kernel time exp((tau/2) W) (general graphs)")
    p.add_argument("--p-halt", dest="p_halt", type=float, default=0.01)
    p.add_argument("--walks", type=int, default=1000)
    p.add_argument("--num-starts", dest="num_starts", type=int)

    args = parser.parse_args(argv)
    _setup_threads(args)
    out_dir = args.out_dir or f"runs/{args.command}"

    if args.command == "gaussian-convergence":
        mapping = {"p_halt": "p_halt", "walks": "walks", "sigma": "sigma",
                   "reps": "reps", "dims": "dims", "n_ladder": "n_ladder"}
        config = _resolve(args, gaussian_convergence.GaussianConvergenceConfig,
                          gaussian_convergence.DESK_PRESET,
                          gaussian_convergence.PAPER_PRESET, mapping)
        gaussian_convergence.run(config, out_dir)
        return 0

    if args.command == "manifold-surrogate":
        mapping = {"surface": "surface", "n_points": "n_points", "walks": "walks",
                   "p_halt": "p_halt", "tau": "tau", "epochs": "epochs",
                   "ground_truth": "ground_truth", "t_analytical": "t_analytical"}
        config = _resolve(args, manifold_surrogate.ManifoldSurrogateConfig,
                          manifold_surrogate.DESK_PRESET,
                          manifold_surrogate.PAPER_PRESET, mapping)
        manifold_surrogate.run(config, out_dir)
        return 0

    if args.command in ("mesh-normals", "mesh-velocity"):
        mapping = {"mesh_path": "mesh_path", "mesh_kind": "mesh_kind",
                   "mask_fraction": "mask_fraction", "tau": "tau",
                   "methods": "methods", "sizes": "sizes",
                   "n_rf": "n_rf", "walks": "walks"}
        preset_extra = {}
        if args.command == "mesh-velocity":
            preset_extra = {"task": "velocity", "mask_fraction": 0.05,
                            "mesh_kind": "cloth"}
        desk = {**mesh_experiments.DESK_PRESET, **preset_extra}
        paper = {**mesh_experiments.PAPER_PRESET, **preset_extra}
        if args.mesh_path:
            desk = {**desk, "mesh_kind": "obj"}
            paper = {**paper, "mesh_kind": "obj"}
        if args.n_dense is not None:
            key = "dense_floor" if args.command == "mesh-normals" else "sizes"
            value = args.n_dense if key == "dense_floor" else [args.n_dense]
            desk = {**desk, key: value}
            paper = {**paper, key: value}
        config = _resolve(args, mesh_experiments.MeshExperimentConfig,
                          desk, paper, mapping)
        if args.command == "mesh-normals":
            mesh_experiments.run_normals(config, out_dir)
        else:
            mesh_experiments.run_velocity(config, out_dir)
        return 0

    if args.command == "selfcheck":
        mapping = {"t": "t", "lmax": "lmax", "kmax": "kmax"}
        config = _resolve(args, selfcheck.SelfCheckConfig, {}, {}, mapping)
        payload = selfcheck.run(config, out_dir)
        for check in payload["checks"]:
            status = "PASS" if check["passed"] else "FAIL"
            print(f"{status} {check['name']}: {check['measured']}")
        return 0 if payload["all_passed"] else 1

    if args.command == "grf-dump":
        return _run_grf_dump(args, out_dir)

    raise SystemExit(f"unknown command {args.command!r}")


def _run_grf_dump(args, out_dir):
    from pathlib import Path

    from manifoldrf.graphs import build_grid_graph, load_graph
    from manifoldrf.grf import (
        WalkConfig,
        grid_heat_modulation,
        heat_modulation,
        run_grf,
    )
    from manifoldrf.io import save_signatures_csv

    seed = args.seed if args.seed is not None else 0
    if args.graph_path:
        graph = load_graph(args.graph_path)
        tau = args.tau if args.tau is not None else 20.0
        modulation = heat_modulation(tau / 2.0)
    else:
        graph = build_grid_graph(args.grid_n, args.grid_d)
        if args.tau is not None:
            modulation = heat_modulation(args.tau / 2.0)
        else:
            modulation = grid_heat_modulation(args.sigma, args.grid_d, args.grid_n)
    rng = np.random.default_rng(seed)
    if args.num_starts is not None and args.num_starts < graph.num_nodes:
        starts = np.sort(rng.choice(graph.num_nodes, size=args.num_starts,
                                    replace=False))
    else:
        starts = None
    sigs = run_grf(graph, modulation,
                   WalkConfig(p_halt=args.p_halt, num_walks=args.walks, seed=seed),
                   start_nodes=starts)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_signatures_csv(sigs, out / "signatures.csv")
    print(f"wrote {sigs.num_vectors} signature vectors to {out / 'signatures.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
