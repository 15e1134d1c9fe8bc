"""Point-cloud samplers for the benchmark geometries: Fibonacci lattices for
the sphere and ellipsoid, intrinsic parameter grids for the Mobius strip and
torus, and wrap-around hypercube grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SurfaceSpec:
    """Named surface with shape parameters.

    kinds: sphere | ellipsoid(a, b, c) | mobius(width) | torus(R, r) |
    hypercube-grid(n, d).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        known = {"sphere", "ellipsoid", "mobius", "torus", "hypercube-grid"}
        if self.kind not in known:
            raise ValueError(f"unknown surface kind {self.kind!r}")
        for v in self.params.values():
            if not np.isscalar(v) or v <= 0:
                raise ValueError("shape parameters must be positive scalars")


def fibonacci_sphere(n):
    """Quasi-uniform golden-angle lattice on the unit sphere."""
    if n < 4:
        raise ValueError("need at least 4 points")
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def fibonacci_ellipsoid(n, a=1.0, b=1.3, c=0.7):
    """Unit-sphere Fibonacci lattice scaled by the semi-axes (a, b, c)."""
    return fibonacci_sphere(n) * np.array([a, b, c])


def _grid_counts(n, aspect):
    n_v = max(2, int(round(math.sqrt(n / aspect))))
    n_u = max(3, int(round(n / n_v)))
    return n_u, n_v


def _dedup(points, decimals=9):
    """Drop exact duplicates after rounding, keeping first occurrences."""
    keys = np.round(points, decimals)
    seen = {}
    keep = []
    for idx, row in enumerate(map(tuple, keys)):
        if row not in seen:
            seen[row] = idx
            keep.append(idx)
    return points[keep]


def mobius_strip(n, width=0.4):
    """Uniform intrinsic (u, v) grid on the Mobius strip.

    Embedding ((1 + (v/2) cos(u/2)) cos u, (1 + (v/2) cos(u/2)) sin u,
    (v/2) sin(u/2)) with u in [0, 2pi), v in [-width, width]. Seam
    duplicates are removed by rounded-coordinate hashing. The point count
    is rounded to the nearest feasible grid, so it can differ slightly
    from ``n``.
    """
    if n < 4:
        raise ValueError("need at least 4 points")
    if width <= 0:
        raise ValueError("width must be positive")
    n_u, n_v = _grid_counts(n, aspect=math.pi / width)
    u = np.linspace(0.0, 2.0 * math.pi, n_u, endpoint=False)
    v = np.linspace(-width, width, n_v)
    U, V = np.meshgrid(u, v, indexing="ij")
    rad = 1.0 + (V / 2.0) * np.cos(U / 2.0)
    pts = np.column_stack([
        (rad * np.cos(U)).ravel(),
        (rad * np.sin(U)).ravel(),
        ((V / 2.0) * np.sin(U / 2.0)).ravel(),
    ])
    pts = _dedup(pts)
    if len(pts) < 4:
        raise ValueError("parameter grid yielded fewer than 4 unique points")
    return pts


def torus_grid(n, big_radius=2.0, small_radius=0.7):
    """Uniform intrinsic (u, v) grid on the torus, both angles periodic."""
    if n < 4:
        raise ValueError("need at least 4 points")
    if small_radius >= big_radius:
        raise ValueError("torus requires r < R")
    n_u, n_v = _grid_counts(n, aspect=big_radius / small_radius)
    u = np.linspace(0.0, 2.0 * math.pi, n_u, endpoint=False)
    v = np.linspace(0.0, 2.0 * math.pi, n_v, endpoint=False)
    U, V = np.meshgrid(u, v, indexing="ij")
    ring = big_radius + small_radius * np.cos(V)
    return np.column_stack([
        (ring * np.cos(U)).ravel(),
        (ring * np.sin(U)).ravel(),
        (small_radius * np.sin(V)).ravel(),
    ])


def sample_surface(spec, n):
    """Sample ``n`` (or the nearest grid-feasible count) points on a surface."""
    if isinstance(spec, str):
        spec = SurfaceSpec(kind=spec)
    p = spec.params
    if spec.kind == "sphere":
        return fibonacci_sphere(n)
    if spec.kind == "ellipsoid":
        return fibonacci_ellipsoid(n, p.get("a", 1.0), p.get("b", 1.3), p.get("c", 0.7))
    if spec.kind == "mobius":
        return mobius_strip(n, p.get("width", 0.4))
    if spec.kind == "torus":
        return torus_grid(n, p.get("R", 2.0), p.get("r", 0.7))
    if spec.kind == "hypercube-grid":
        from manifoldrf.graphs import grid_coordinates

        side = int(round(n ** (1.0 / p.get("d", 1))))
        return grid_coordinates(p.get("n", side), int(p.get("d", 1)))
    raise ValueError(f"unknown surface kind {spec.kind!r}")


def random_surface_points(spec, n, seed=0):
    """Random (non-lattice) points on a surface, for out-of-sample queries."""
    if isinstance(spec, str):
        spec = SurfaceSpec(kind=spec)
    rng = np.random.default_rng(seed)
    p = spec.params
    if spec.kind in ("sphere", "ellipsoid"):
        pts = rng.normal(size=(n, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        if spec.kind == "ellipsoid":
            pts *= np.array([p.get("a", 1.0), p.get("b", 1.3), p.get("c", 0.7)])
        return pts
    if spec.kind == "torus":
        R = p.get("R", 2.0)
        r = p.get("r", 0.7)
        u = rng.uniform(0.0, 2.0 * math.pi, size=n)
        v = rng.uniform(0.0, 2.0 * math.pi, size=n)
        ring = R + r * np.cos(v)
        return np.column_stack([ring * np.cos(u), ring * np.sin(u), r * np.sin(v)])
    if spec.kind == "mobius":
        w = p.get("width", 0.4)
        u = rng.uniform(0.0, 2.0 * math.pi, size=n)
        v = rng.uniform(-w, w, size=n)
        rad = 1.0 + (v / 2.0) * np.cos(u / 2.0)
        return np.column_stack([rad * np.cos(u), rad * np.sin(u),
                                (v / 2.0) * np.sin(u / 2.0)])
    raise ValueError(f"no random sampler for surface kind {spec.kind!r}")


def surface_residuals(spec, points):
    """Implicit-equation residuals; zero for points exactly on the surface.

    Defined for sphere, ellipsoid, and torus (the Mobius strip has no
    simple implicit form).
    """
    if isinstance(spec, str):
        spec = SurfaceSpec(kind=spec)
    pts = np.asarray(points, dtype=np.float64)
    p = spec.params
    if spec.kind == "sphere":
        return np.abs(np.linalg.norm(pts, axis=1) - 1.0)
    if spec.kind == "ellipsoid":
        axes = np.array([p.get("a", 1.0), p.get("b", 1.3), p.get("c", 0.7)])
        return np.abs(np.sum((pts / axes) ** 2, axis=1) - 1.0)
    if spec.kind == "torus":
        R = p.get("R", 2.0)
        r = p.get("r", 0.7)
        ring_dist = np.hypot(np.hypot(pts[:, 0], pts[:, 1]) - R, pts[:, 2])
        return np.abs(ring_dist - r)
    raise ValueError(f"no implicit residual for surface kind {spec.kind!r}")
