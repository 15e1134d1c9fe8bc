"""Shared experiment plumbing: config resolution, stopwatches, manifests,
and the mesh surrogate training pipeline used by the interpolation studies."""

from __future__ import annotations

import dataclasses
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

import manifoldrf
from manifoldrf.graphs import (
    build_knn_graph,
    geodesic_distances,
    normalized_walk_graph,
)
from manifoldrf.grf import WalkConfig, heat_modulation, run_grf
from manifoldrf.io import save_json
from manifoldrf.surrogate import TrainConfig, build_dataset, predict_feature_matrix, train


def resolve_config(cls, preset=None, file_values=None, overrides=None):
    """Layer defaults <- preset <- config file <- explicit overrides.

    Unknown keys are rejected; values are coerced to the dataclass field
    types so config files can stay plain text.
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    values = {}
    for layer in (preset or {}, file_values or {}, overrides or {}):
        for key, val in layer.items():
            name = key.replace("-", "_")
            if name not in fields:
                raise ValueError(f"unknown config key {key!r} for {cls.__name__}")
            values[name] = _coerce(val, fields[name].type)
    return cls(**values)


def _coerce(value, annotation):
    if not isinstance(value, str):
        return value
    text = str(annotation)
    if "bool" in text:
        return value.lower() in ("1", "true", "yes", "on")
    if "int" in text and "list" not in text:
        return int(value)
    if "float" in text:
        return float(value)
    if "list" in text:
        return [int(v) for v in value.replace(",", " ").split()]
    return value


def parse_config_file(path):
    """Flat ``key=value`` text; blank lines and # comments ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, val = stripped.partition("=")
        out[key.strip()] = val.strip()
    return out


@contextmanager
def stopwatch(record, key):
    """Accumulate wall-clock seconds into record[key]."""
    t0 = time.perf_counter()
    yield
    record[key] = record.get(key, 0.0) + (time.perf_counter() - t0)


def write_manifest(out_dir, experiment, config, extra=None):
    """Record everything needed to re-run bit-identically (no wall-clock)."""
    payload = {
        "experiment": experiment,
        "package_version": manifoldrf.__version__,
        "config": dataclasses.asdict(config),
    }
    if extra:
        payload.update(extra)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_json(payload, out / "manifest.json")


@dataclasses.dataclass(frozen=True)
class MeshSurrogateBudget:
    """Fixed walk/training budgets for the mesh kernel surrogate."""

    tau: float = 20.0
    knn_k: int = 16
    num_starts: int = 200
    walks: int = 5000
    p_halt: float = 0.01
    keep_threshold: float = 0.1
    retain_prob: float = 0.025
    epochs: int = 100
    batch_size: int = 2048
    learning_rate: float = 1e-3
    val_split: float = 0.2
    max_steps: int | None = 300
    n_rf: int = 256
    seed: int = 0


def train_point_surrogate(points, budget, timings=None):
    """Full surrogate preprocessing on a point cloud.

    Builds the kNN graph, walks the normalized affinities to estimate the
    half-kernel exp((tau/2) W_f), assembles supervision with geodesic
    inputs, and trains the network. Returns a dict with the graph, trained
    params, and the sampled start nodes.
    """
    timings = {} if timings is None else timings
    rng = np.random.default_rng(budget.seed)
    with stopwatch(timings, "graph_seconds"):
        graph = build_knn_graph(points, budget.knn_k)
        walk_graph = normalized_walk_graph(graph)
    n = graph.num_nodes
    starts = np.sort(rng.choice(n, size=min(budget.num_starts, n), replace=False))
    # f(k) = (tau/2)^k / k!: signature values approximate exp((tau/2) W_f),
    # so feature dot products over the node set target exp(tau W_f)
    modulation = heat_modulation(budget.tau)
    with stopwatch(timings, "walk_seconds"):
        sigs = run_grf(walk_graph, modulation,
                       WalkConfig(p_halt=budget.p_halt, num_walks=budget.walks,
                                  seed=budget.seed), starts)
    with stopwatch(timings, "geodesic_seconds"):
        geos = geodesic_distances(graph, starts)
    with stopwatch(timings, "dataset_seconds"):
        dataset = build_dataset(sigs, points, geos,
                                keep_threshold=budget.keep_threshold,
                                retain_prob=budget.retain_prob, seed=budget.seed)
    with stopwatch(timings, "train_seconds"):
        params, history = train(dataset, TrainConfig(
            learning_rate=budget.learning_rate, batch_size=budget.batch_size,
            epochs=budget.epochs, val_split=budget.val_split,
            seed=budget.seed, max_steps=budget.max_steps))
    return {
        "graph": graph,
        "params": params,
        "history": history,
        "signatures": sigs,
        "start_nodes": starts,
        "dataset_size": len(dataset),
        "timings": timings,
    }


def feature_matrix_for_nodes(state, node_ids, budget, timings=None):
    """Low-rank feature rows for ``node_ids``: draw anchors, compute anchor
    geodesics, and evaluate the surrogate. Phi @ Phi.T targets exp(tau W_f)."""
    timings = {} if timings is None else timings
    graph = state["graph"]
    rng = np.random.default_rng(budget.seed + 1)
    anchors = np.sort(rng.choice(graph.num_nodes,
                                 size=min(budget.n_rf, graph.num_nodes),
                                 replace=False))
    with stopwatch(timings, "anchor_geodesic_seconds"):
        anchor_geos = geodesic_distances(graph, anchors)
    with stopwatch(timings, "feature_eval_seconds"):
        points = graph.points
        phi = predict_feature_matrix(state["params"], points[node_ids],
                                     points[anchors],
                                     anchor_geos[:, node_ids].T)
    return phi
