"""Numerical self-checks of the oracle layer: discretization consistency of
the grid Laplacian, the periodized-Gaussian limit of the grid heat kernel,
quadrature verification of the Gaussian feature factorization, the midpoint
norm identity, and sphere-series truncation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from manifoldrf.graphs import build_grid_graph, grid_coordinates, rescaled_random_walk_laplacian
from manifoldrf.io import save_json
from manifoldrf.oracles import (
    g_sigma,
    gaussian_kernel,
    periodized_gaussian,
    spectral_heat_kernel,
    sphere_heat_kernel,
    sphere_heat_kernel_matrix,
)
from manifoldrf.surfaces import fibonacci_sphere
from manifoldrf.experiments.common import write_manifest


@dataclass(frozen=True)
class SelfCheckConfig:
    sigma: float = 0.2
    t: float = 0.25
    lmax: int = 50
    kmax: int = 3
    seed: int = 0


def check_laplacian_rate(config):
    """Sup-norm error of L_n f against the negative Laplacian of
    f = prod sin(2 pi x_c) should shrink ~4x when n doubles (16 -> 32)."""
    ratios = {}
    passed = True
    for d in (1, 2):
        errs = {}
        for n in (16, 32):
            graph = build_grid_graph(n, d)
            L = rescaled_random_walk_laplacian(graph)
            coords = grid_coordinates(n, d)
            f = np.prod(np.sin(2.0 * np.pi * coords), axis=1)
            target = 4.0 * np.pi**2 * d * f
            errs[n] = float(np.max(np.abs(L @ f - target)))
        ratios[d] = errs[16] / errs[32]
        passed &= 3.2 <= ratios[d] <= 4.8
    return {
        "name": "laplacian-consistency-rate",
        "passed": bool(passed),
        "measured": {f"d{d}_ratio": r for d, r in ratios.items()},
        "threshold": "error ratio n=16 -> 32 within [3.2, 4.8]",
    }


def check_periodized_limit(config):
    """n * exp(-(sigma^2/2) L_n) converges to the periodized Gaussian density."""
    sigma = config.sigma
    errs = []
    for n in (16, 32, 64):
        graph = build_grid_graph(n, 1)
        L = rescaled_random_walk_laplacian(graph)
        K = spectral_heat_kernel(L, sigma * sigma / 2.0, sign=-1)
        xs = np.arange(n) / n
        worst = 0.0
        for i in range(n):
            for j in range(n):
                truth = periodized_gaussian(np.array([xs[i]]), np.array([xs[j]]),
                                            sigma, k_max=config.kmax)
                worst = max(worst, abs(n * K[i, j] - truth))
        errs.append(float(worst))
    passed = errs[0] > errs[1] > errs[2]
    return {
        "name": "periodized-gaussian-limit",
        "passed": bool(passed),
        "measured": {"errors_n16_n32_n64": errs},
        "threshold": "strictly decreasing max deviation",
    }


def check_gaussian_quadrature(config):
    """Trapezoid quadrature of g(x,.) g(y,.) reproduces the Gaussian kernel."""
    sigma = config.sigma
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(20):
        x = rng.uniform(-1.0, 1.0)
        y = x + rng.uniform(-3.0 * sigma, 3.0 * sigma)
        mid = 0.5 * (x + y)
        grid = np.arange(mid - 6.0 * sigma, mid + 6.0 * sigma + 1e-12, sigma / 50.0)
        vals = (g_sigma(grid[:, None], np.array([[x]]).T, sigma)
                * g_sigma(grid[:, None], np.array([[y]]).T, sigma))
        quad = float(np.trapezoid(vals, grid))
        truth = float(gaussian_kernel(np.array([x]), np.array([y]), sigma))
        worst = float(max(worst, abs(quad - truth)))
    return {
        "name": "gaussian-factorization-quadrature",
        "passed": bool(worst < 1e-6),
        "measured": {"max_abs_deviation": worst},
        "threshold": "< 1e-6",
    }


def check_midpoint_identity(config):
    """||x-w||^2 + ||y-w||^2 = 2 ||w-m||^2 + ||x-y||^2 / 2 with m the midpoint."""
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(200):
        d = rng.integers(1, 6)
        x, y, w = rng.normal(size=(3, d))
        m = 0.5 * (x + y)
        lhs = np.sum((x - w) ** 2) + np.sum((y - w) ** 2)
        rhs = 2.0 * np.sum((w - m) ** 2) + 0.5 * np.sum((x - y) ** 2)
        worst = float(max(worst, abs(lhs - rhs)))
    return {
        "name": "midpoint-norm-identity",
        "passed": bool(worst < 1e-12),
        "measured": {"max_abs_residual": worst},
        "threshold": "< 1e-12",
    }


def check_sphere_series(config):
    """Truncation self-consistency and unit mass of the sphere heat kernel."""
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(10):
        x, y = rng.normal(size=(2, 3))
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        a = sphere_heat_kernel(x, y, config.t, l_max=config.lmax)
        b = sphere_heat_kernel(x, y, config.t, l_max=2 * config.lmax)
        worst = float(max(worst, abs(a - b)))
    pts = fibonacci_sphere(4000)
    row = sphere_heat_kernel_matrix(pts[:1], config.t, l_max=config.lmax,
                                    points2=pts)[0]
    mass = float(4.0 * np.pi / len(pts) * np.sum(row))
    passed = worst < 1e-8 and abs(mass - 1.0) < 0.02
    return {
        "name": "sphere-series-tail",
        "passed": bool(passed),
        "measured": {"truncation_gap": worst, "quadrature_mass": mass},
        "threshold": "gap < 1e-8 and mass within 1 +- 0.02",
    }


CHECKS = [
    check_laplacian_rate,
    check_periodized_limit,
    check_gaussian_quadrature,
    check_midpoint_identity,
    check_sphere_series,
]


def run(config, out_dir=None):
    results = [check(config) for check in CHECKS]
    all_passed = all(r["passed"] for r in results)
    payload = {"checks": results, "all_passed": all_passed}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_json(payload, out / "selfcheck.json")
        write_manifest(out, "selfcheck", config)
    return payload
