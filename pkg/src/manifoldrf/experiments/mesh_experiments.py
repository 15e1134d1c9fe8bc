"""Mesh interpolation studies with a full-kernel (FK) baseline and the
low-rank feature (MRF) path, over a vertex-count ladder.

Normals: the FK baseline builds the dense kernel exp(tau W_f) of the
face-edge graph by eigendecomposition and diffuses the masked normal field;
the MRF path trains the surrogate on an area-densified kNN cloud and applies
the factored kernel. Velocity: both paths share one kNN graph on the
densified cloud and use the normalized ratio interpolant.

Accounting: preprocessing covers everything done once per mesh (graph,
eigendecomposition or walks + training + feature precomputation);
interpolation covers only the per-field operator application. The FK side
scales cubically with vertex count while the MRF budgets are fixed, which is
the scaling contrast the ladder exposes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from manifoldrf.graphs import build_knn_graph, symmetric_normalized_affinity
from manifoldrf.interpolate import (
    dense_kernel_apply,
    factored_kernel_apply,
    interpolate_normals,
    interpolate_velocity_normalized,
    mask_field,
    masked_relative_error,
    mean_cosine_similarity,
)
from manifoldrf.io import save_table_csv
from manifoldrf.meshes import (
    cloth_grid_mesh,
    densify_mesh,
    load_mesh,
    mesh_edge_graph,
    torus_mesh,
    transfer_field,
    vertex_normals,
)
from manifoldrf.oracles import spectral_heat_kernel
from manifoldrf.experiments.common import (
    MeshSurrogateBudget,
    feature_matrix_for_nodes,
    stopwatch,
    train_point_surrogate,
    write_manifest,
)

DESK_PRESET = {"sizes": [500, 1000, 2000, 4000]}
PAPER_PRESET = {"sizes": [2000, 4000, 8000, 16000], "dense_floor": 5000,
                "walks": 10_000, "num_starts": 1000, "max_steps": 2000}


@dataclass(frozen=True)
class MeshExperimentConfig:
    task: str = "normals"
    mesh_kind: str = "torus"
    mesh_path: str | None = None
    sizes: list = field(default_factory=lambda: [2000])
    mask_fraction: float = 0.8
    tau: float = 20.0
    dense_floor: int = 2500
    methods: str = "both"
    knn_k: int = 16
    num_starts: int = 200
    walks: int = 5000
    p_halt: float = 0.01
    epochs: int = 100
    batch_size: int = 2048
    learning_rate: float = 1e-3
    max_steps: int = 300
    n_rf: int = 256
    size_timeout_seconds: float = 900.0
    seed: int = 0

    def budget(self):
        return MeshSurrogateBudget(
            tau=self.tau, knn_k=self.knn_k, num_starts=self.num_starts,
            walks=self.walks, p_halt=self.p_halt, epochs=self.epochs,
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            max_steps=self.max_steps, n_rf=self.n_rf, seed=self.seed)


def make_mesh(kind, size, path=None):
    """Synthetic mesh with roughly ``size`` vertices, or an OBJ file."""
    if kind == "obj":
        if path is None:
            raise ValueError("mesh_kind 'obj' requires mesh_path")
        return load_mesh(path, triangulate_quads=True)
    if kind == "torus":
        aspect = 2.0 / 0.7
        n_u = max(3, int(round(math.sqrt(size * aspect))))
        n_v = max(3, int(round(size / n_u)))
        return torus_mesh(n_u, n_v)
    if kind == "cloth":
        n_x = max(2, int(round(math.sqrt(size * 2.0))))
        n_y = max(2, int(round(size / n_x)))
        return cloth_grid_mesh(n_x, n_y)
    raise ValueError(f"unknown mesh kind {kind!r}")


def _fk_normals(mesh, masked, truth, tau):
    timings = {}
    with stopwatch(timings, "preprocess_seconds"):
        graph = mesh_edge_graph(mesh)
        Wf = symmetric_normalized_affinity(graph.to_dense())
        K = spectral_heat_kernel(Wf, tau, sign=+1)
    report = interpolate_normals(dense_kernel_apply(K), masked, truth=truth)
    report.preprocess_seconds = timings["preprocess_seconds"]
    return report


def _mrf_normals(mesh, masked, truth, config):
    budget = config.budget()
    timings = {}
    with stopwatch(timings, "preprocess_seconds"):
        n_dense = max(mesh.num_vertices, config.dense_floor)
        cloud = densify_mesh(mesh, n_dense, seed=config.seed)
        state = train_point_surrogate(cloud.points, budget)
        vertex_ids = np.arange(mesh.num_vertices)
        phi = feature_matrix_for_nodes(state, vertex_ids, budget)
    report = interpolate_normals(factored_kernel_apply(phi), masked, truth=truth)
    report.preprocess_seconds = timings["preprocess_seconds"]
    return report


def run_normals(config, out_dir=None):
    """Normal prediction over the size ladder; returns result + timing rows."""
    rows = []
    timing_rows = []
    reports = {}
    _warm_up(config)
    started = time.perf_counter()
    censored = False
    for size in config.sizes:
        if censored or (time.perf_counter() - started > config.size_timeout_seconds
                        and size != config.sizes[0]):
            censored = True
            for method in _methods(config):
                timing_rows.append({"method": method, "size": size,
                                    "preprocess_seconds": float("nan"),
                                    "interpolate_seconds": float("nan"),
                                    "censored": 1})
            continue
        mesh = make_mesh(config.mesh_kind, size, config.mesh_path)
        truth = vertex_normals(mesh)
        masked = mask_field(truth, config.mask_fraction, seed=config.seed)
        per_size = {}
        for method in _methods(config):
            if method == "fk":
                report = _fk_normals(mesh, masked, truth, config.tau)
            else:
                report = _mrf_normals(mesh, masked, truth, config)
            per_size[method] = report
            rows.append({
                "method": method, "size": mesh.num_vertices,
                "mask_fraction": config.mask_fraction,
                "score": report.score,
                "zero_rows": len(report.zero_rows),
            })
            timing_rows.append({
                "method": method, "size": mesh.num_vertices,
                "preprocess_seconds": report.preprocess_seconds,
                "interpolate_seconds": report.interpolate_seconds,
                "censored": 0,
            })
        reports[size] = per_size
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_table_csv(rows, ["method", "size", "mask_fraction", "score",
                              "zero_rows"], out / "results.csv")
        save_table_csv(timing_rows, ["method", "size", "preprocess_seconds",
                                     "interpolate_seconds", "censored"],
                       out / "timings.csv")
        write_manifest(out, "mesh-normals", config)
    return {"rows": rows, "timing_rows": timing_rows, "reports": reports}


def run_velocity(config, out_dir=None):
    """Velocity interpolation on a densified cloth sheet over an n_dense ladder."""
    base = make_mesh(config.mesh_kind if config.mesh_kind != "torus" else "cloth",
                     min(1200, min(config.sizes)), config.mesh_path)
    if base.velocities is None:
        raise ValueError("velocity task needs a mesh with a velocity field")
    rows = []
    timing_rows = []
    reports = {}
    _warm_up(config)
    for n_dense in config.sizes:
        if n_dense < base.num_vertices:
            raise ValueError("ladder size below base vertex count")
        cloud = densify_mesh(base, n_dense, seed=config.seed)
        velocity = transfer_field(cloud, base.velocities)
        masked = mask_field(velocity, config.mask_fraction, seed=config.seed)
        per_size = {}
        for method in _methods(config):
            timings = {}
            if method == "fk":
                with stopwatch(timings, "preprocess_seconds"):
                    graph = build_knn_graph(cloud.points, config.knn_k)
                    Wf = symmetric_normalized_affinity(graph.to_dense())
                    K = spectral_heat_kernel(Wf, config.tau, sign=+1)
                apply = dense_kernel_apply(K)
            else:
                with stopwatch(timings, "preprocess_seconds"):
                    state = train_point_surrogate(cloud.points, config.budget())
                    phi = feature_matrix_for_nodes(
                        state, np.arange(cloud.num_points), config.budget())
                apply = factored_kernel_apply(phi)
            report = interpolate_velocity_normalized(apply, masked.values,
                                                     masked.mask)
            report.preprocess_seconds = timings["preprocess_seconds"]
            report.score = masked_relative_error(report.predictions, velocity,
                                                 masked.masked_ids)
            per_size[method] = report
            rows.append({
                "method": method, "size": cloud.num_points,
                "mask_fraction": config.mask_fraction,
                "masked_relative_error": report.score,
            })
            timing_rows.append({
                "method": method, "size": cloud.num_points,
                "preprocess_seconds": report.preprocess_seconds,
                "interpolate_seconds": report.interpolate_seconds,
                "censored": 0,
            })
        if "fk" in per_size and "mrf" in per_size:
            agreement = masked_relative_error(
                per_size["mrf"].predictions, per_size["fk"].predictions,
                masked.masked_ids)
            rows.append({"method": "mrf_vs_fk", "size": cloud.num_points,
                         "mask_fraction": config.mask_fraction,
                         "masked_relative_error": agreement})
        reports[n_dense] = per_size
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_table_csv(rows, ["method", "size", "mask_fraction",
                              "masked_relative_error"], out / "results.csv")
        save_table_csv(timing_rows, ["method", "size", "preprocess_seconds",
                                     "interpolate_seconds", "censored"],
                       out / "timings.csv")
        write_manifest(out, "mesh-velocity", config)
    return {"rows": rows, "timing_rows": timing_rows, "reports": reports}


def _methods(config):
    if config.methods == "both":
        return ["fk", "mrf"]
    if config.methods in ("fk", "mrf"):
        return [config.methods]
    raise ValueError("methods must be fk, mrf, or both")


def _warm_up(config):
    """Small untimed run: compiles the walker and primes the BLAS threads."""
    mesh = make_mesh("torus", 120)
    truth = vertex_normals(mesh)
    masked = mask_field(truth, 0.5, seed=0)
    _fk_normals(mesh, masked, truth, config.tau)


def fit_loglog_slope(sizes, seconds):
    """Least-squares slope of log(seconds) against log(size)."""
    sizes = np.asarray(sizes, dtype=np.float64)
    seconds = np.asarray(seconds, dtype=np.float64)
    if np.any(seconds <= 0):
        raise ValueError("need positive timings")
    x = np.log(sizes)
    y = np.log(seconds)
    slope = np.sum((x - x.mean()) * (y - y.mean())) / np.sum((x - x.mean()) ** 2)
    return float(slope)
