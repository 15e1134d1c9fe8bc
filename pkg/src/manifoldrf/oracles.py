"""Ground-truth kernels: spectral heat kernels, the analytic sphere heat
kernel, Gaussian kernels and their continuous feature map, the periodized
Gaussian on the torus, and tensorized grid heat kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    def apply_function(self, fn):
        """V diag(fn(lambda)) V^T."""
        return (self.eigenvectors * fn(self.eigenvalues)) @ self.eigenvectors.T


def eigendecompose_symmetric(M, sym_tol=1e-10):
    """Full dense eigendecomposition; the cubic-cost baseline everything is
    compared against."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return SpectralDecomposition(eigenvalues=w, eigenvectors=V)


def spectral_heat_kernel(M, t, sign=-1):
    """Matrix exponential exp(sign * t * M) via full eigendecomposition.

    ``sign=-1`` gives exp(-tL) for a Laplacian-like M; ``sign=+1`` gives
    exp(t W_f) for a normalized affinity.
    """
    if t < 0:
        raise ValueError("diffusion time must be non-negative")
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    dec = M if isinstance(M, SpectralDecomposition) else eigendecompose_symmetric(M)
    K = dec.apply_function(lambda w: np.exp(sign * t * w))
    return 0.5 * (K + K.T)


def _legendre_sum(z, t, l_max):
    """sum_l (2l+1)/(4pi) e^{-l(l+1)t} P_l(z) by the three-term recurrence."""
    z = np.clip(z, -1.0, 1.0)
    p_prev = np.ones_like(z)
    p_cur = z.copy()
    total = (1.0 / (4.0 * np.pi)) * p_prev
    total += (3.0 / (4.0 * np.pi)) * math.exp(-2.0 * t) * p_cur
    for ell in range(2, l_max + 1):
        p_next = ((2 * ell - 1) * z * p_cur - (ell - 1) * p_prev) / ell
        total += (2 * ell + 1) / (4.0 * np.pi) * math.exp(-ell * (ell + 1) * t) * p_next
        p_prev, p_cur = p_cur, p_next
    return total


def sphere_heat_kernel(x, y, t, l_max=50):
    """Heat kernel on the unit 2-sphere, truncated Legendre expansion.

    K(x, y) = sum_{l<=l_max} (2l+1)/(4pi) e^{-l(l+1)t} P_l(<x, y>).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t <= 0:
        raise ValueError("diffusion time must be positive")
    for v in (x, y):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("sphere heat kernel requires unit vectors")
    return float(_legendre_sum(np.array(float(np.dot(x, y))), t, l_max))


def sphere_heat_kernel_matrix(points, t, l_max=50, points2=None, chunk=512):
    """Pairwise analytic sphere heat kernel for unit points (N, 3)."""
    points = np.asarray(points, dtype=np.float64)
    other = points if points2 is None else np.asarray(points2, dtype=np.float64)
    for P in (points, other):
        if np.max(np.abs(np.linalg.norm(P, axis=1) - 1.0)) > 1e-9:
            raise ValueError("sphere heat kernel requires unit vectors")
    out = np.empty((len(points), len(other)))
    for lo in range(0, len(points), chunk):
        hi = min(len(points), lo + chunk)
        out[lo:hi] = _legendre_sum(points[lo:hi] @ other.T, t, l_max)
    return out


def gaussian_kernel(x, y, sigma):
    """exp(-||x - y||^2 / (2 sigma^2)) for equal-dimension inputs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    d2 = np.sum((x - y) ** 2, axis=-1)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def gaussian_kernel_matrix(X, Y, sigma):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    d2 = np.sum(X**2, axis=1)[:, None] + np.sum(Y**2, axis=1)[None, :] - 2.0 * X @ Y.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def g_sigma(x, omega, sigma):
    """Continuous feature map of the Gaussian kernel.

    g(x, w) = (2 / (pi sigma^2))^{d/4} exp(-||x - w||^2 / sigma^2); integrating
    g(x, .) g(y, .) over R^d reproduces gaussian_kernel(x, y, sigma).
    """
    x = np.asarray(x, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d = x.shape[-1] if x.ndim else 1
    peak = (2.0 / (np.pi * sigma * sigma)) ** (d / 4.0)
    d2 = np.sum((x - omega) ** 2, axis=-1)
    return peak * np.exp(-d2 / (sigma * sigma))


def periodized_gaussian(x, y, sigma, k_max=3):
    """Heat-kernel density on the unit torus: Gaussian image sum.

    sum over ||k||_inf <= k_max of (2 pi sigma^2)^{-d/2}
    exp(-||x - y + k||^2 / (2 sigma^2)). The box-truncated lattice sum
    factorizes over coordinates.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    if np.any(x < 0) or np.any(x >= 1) or np.any(y < 0) or np.any(y >= 1):
        raise ValueError("torus coordinates must lie in [0, 1)")
    delta = x - y
    total = np.ones(())
    norm = 1.0 / math.sqrt(2.0 * np.pi * sigma * sigma)
    for j in range(delta.shape[-1] if delta.ndim else 1):
        dj = delta[..., j] if delta.ndim else delta
        acc = 0.0
        for k in range(-k_max, k_max + 1):
            acc = acc + np.exp(-((dj + k) ** 2) / (2.0 * sigma * sigma))
        total = total * (norm * acc)
    return float(total)


def periodized_image_sum(delta, sigma, k_max=3):
    """Unnormalized 1-D Gaussian-kernel image sum over integer shifts.

    This is the torus-consistent counterpart of the plain Gaussian kernel
    factor exp(-delta^2 / (2 sigma^2)); multiplying per-coordinate factors
    gives the d-dimensional box-truncated image sum.
    """
    delta = np.asarray(delta, dtype=np.float64)
    acc = np.zeros_like(delta)
    for k in range(-k_max, k_max + 1):
        acc += np.exp(-((delta + k) ** 2) / (2.0 * sigma * sigma))
    return acc


def calibrate_spectral_time(M, K_target, s_grid, sign=-1):
    """Diffusion time making exp(sign * s * M) best match a target kernel.

    For each s on the grid, the spectral kernel is Frobenius-aligned to the
    target and scored by entrywise R^2. Working in the eigenbasis makes the
    scan O(N) per grid point after one projection: with M = V diag(w) V^T,
    ||K(s)||_F^2 = sum_i e^{2 s w_i} and <K(s), T> = sum_i e^{s w_i} (V^T T V)_ii.

    Returns (best_s, best_r2, r2_curve).
    """
    dec = M if isinstance(M, SpectralDecomposition) else eigendecompose_symmetric(M)
    K_target = np.asarray(K_target, dtype=np.float64)
    s_grid = np.asarray(s_grid, dtype=np.float64)
    proj_diag = np.einsum("ji,jk,ki->i", dec.eigenvectors, K_target, dec.eigenvectors)
    norm_t_sq = float(np.sum(K_target**2))
    ss_tot = float(np.sum((K_target - K_target.mean()) ** 2))
    r2 = np.empty(len(s_grid))
    for idx, s in enumerate(s_grid):
        spectrum = np.exp(sign * s * dec.eigenvalues)
        norm_k = math.sqrt(float(np.sum(spectrum**2)))
        inner = float(np.dot(spectrum, proj_diag))
        ss_res = 2.0 * norm_t_sq - 2.0 * math.sqrt(norm_t_sq) * inner / norm_k
        r2[idx] = 1.0 - ss_res / ss_tot
    best = int(np.argmax(r2))
    return float(s_grid[best]), float(r2[best]), r2


@dataclass(frozen=True)
class KroneckerHeatGrid:
    """d-dimensional wrap-around grid heat kernel as a product of 1-D factors.

    The grid random-walk Laplacian is a Kronecker sum of 1-D ring operators,
    so exp(-tL) entries factor across coordinates: only the n x n 1-D kernel
    is ever materialized unless ``full_matrix`` is requested.
    """

    n: int
    d: int
    t: float
    factor: np.ndarray

    def entries(self, I, J):
        """Kernel entries for multi-index arrays I, J of shape (M, d)."""
        I = np.atleast_2d(np.asarray(I, dtype=np.int64))
        J = np.atleast_2d(np.asarray(J, dtype=np.int64))
        if I.shape != J.shape or I.shape[1] != self.d:
            raise ValueError("multi-index arrays must be (M, d)")
        out = np.ones(len(I))
        for c in range(self.d):
            out *= self.factor[I[:, c], J[:, c]]
        return out

    def full_matrix(self, max_nodes=20_000):
        total = self.n**self.d
        if total > max_nodes:
            raise ValueError(f"full matrix of {total} nodes is too large")
        K = np.ones((1, 1))
        for _ in range(self.d):
            K = np.kron(K, self.factor)
        return K


def kronecker_heat_grid(n, d, t):
    """Tensorized heat kernel exp(-tL) of the wrap-around n^d grid."""
    from manifoldrf.graphs import build_grid_graph, rescaled_random_walk_laplacian

    if n < 3 or d < 1:
        raise ValueError("need n >= 3 and d >= 1")
    ring = build_grid_graph(n, 1)
    L1 = rescaled_random_walk_laplacian(ring)
    factor = spectral_heat_kernel(L1, t, sign=-1)
    return KroneckerHeatGrid(n=n, d=d, t=t, factor=factor)
