"""Feature-map assembly from learned g-values, grid signature rescaling,
Frobenius-norm alignment, and kernel error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from manifoldrf.errors import AlignmentError
from manifoldrf.grf import SignatureSet


@dataclass
class MrfFeatureMap:
    """Per-point feature vectors whose dot products approximate a kernel.

    ``full`` uses every anchor once and reproduces the anchor sum exactly;
    ``sampled`` draws ``m`` anchors i.i.d. from ``density`` and reweights
    by 1/sqrt(m p(anchor)), an unbiased estimate of the same sum.
    """

    variant: str
    anchors: np.ndarray
    features: np.ndarray
    density: np.ndarray | None = None

    def gram(self, other=None):
        other = self if other is None else other
        return self.features @ other.features.T


def assemble_mrf(g_values, variant="full", num_features=None, density=None, seed=0):
    """Assemble feature vectors from a (points x anchors) matrix of g-values.

    full:    feature_l(z) = g(z, anchor_l) over all anchors; dot products
             equal sum_w g(x, w) g(y, w) exactly.
    sampled: anchors w_1..w_m drawn i.i.d. from ``density`` (uniform when
             omitted); feature_l(z) = g(z, w_l) / sqrt(m p(w_l)).
    """
    g_values = np.asarray(g_values, dtype=np.float64)
    if g_values.ndim != 2:
        raise ValueError("g_values must be (num_points, num_anchors)")
    if np.any(g_values < 0):
        raise ValueError("g-values must be non-negative")
    n_anchor = g_values.shape[1]

    if variant == "full":
        return MrfFeatureMap(
            variant="full",
            anchors=np.arange(n_anchor, dtype=np.int64),
            features=g_values.copy(),
        )
    if variant != "sampled":
        raise ValueError("variant must be 'full' or 'sampled'")
    if num_features is None or num_features < 1:
        raise ValueError("sampled variant needs num_features >= 1")
    if density is None:
        density = np.full(n_anchor, 1.0 / n_anchor)
    else:
        density = np.asarray(density, dtype=np.float64)
        if density.shape != (n_anchor,) or np.any(density < 0):
            raise ValueError("density must be a non-negative vector over anchors")
        total = density.sum()
        if total <= 0:
            raise ValueError("density must have positive mass")
        density = density / total
    rng = np.random.default_rng(seed)
    drawn = rng.choice(n_anchor, size=num_features, p=density)
    p_drawn = density[drawn]
    if np.any(p_drawn <= 0):
        raise ValueError("drew an anchor with zero density")
    feats = g_values[:, drawn] / np.sqrt(num_features * p_drawn)[None, :]
    return MrfFeatureMap(
        variant="sampled", anchors=drawn, features=feats, density=density
    )


def grid_rescale_constant(d, sigma, n):
    """(2 pi sigma^2)^{d/4} n^{d/2}, the grid-to-continuum signature scale."""
    if sigma <= 0 or n < 1 or d < 1:
        raise ValueError("need sigma > 0, n >= 1, d >= 1")
    return (2.0 * np.pi * sigma * sigma) ** (d / 4.0) * float(n) ** (d / 2.0)


def rescale_signatures(signatures, d, sigma, n):
    """Entrywise rescale of grid signatures by ``grid_rescale_constant``.

    Dot products of the rescaled vectors approximate Gaussian-kernel values
    on the grid. Accepts a SignatureSet or a plain array.
    """
    c = grid_rescale_constant(d, sigma, n)
    if isinstance(signatures, SignatureSet):
        return signatures.scaled(c)
    return c * np.asarray(signatures, dtype=np.float64)


def frobenius_align(K_est, K_gt):
    """Scale K_est so its Frobenius norm matches K_gt's.

    Returns (alpha, alpha * K_est) with alpha = ||K_gt||_F / ||K_est||_F.
    """
    K_est = np.asarray(K_est, dtype=np.float64)
    K_gt = np.asarray(K_gt, dtype=np.float64)
    if K_est.shape != K_gt.shape:
        raise ValueError("shape mismatch")
    norm_est = np.linalg.norm(K_est)
    if norm_est == 0:
        raise AlignmentError("estimate matrix has zero Frobenius norm")
    alpha = np.linalg.norm(K_gt) / norm_est
    return alpha, alpha * K_est


def relative_mse(estimates, truth):
    """Mean over repetitions of ||estimate - truth||^2 / ||truth||^2.

    ``estimates`` either matches ``truth``'s shape (single repetition) or
    carries a leading repetition axis. Matrices are flattened before the
    norm ratio.
    """
    truth = np.asarray(truth, dtype=np.float64)
    estimates = np.asarray(estimates, dtype=np.float64)
    denom = np.sum(truth**2)
    if denom == 0:
        raise ValueError("truth has zero norm")
    if estimates.shape == truth.shape:
        estimates = estimates[None]
    elif estimates.shape[1:] != truth.shape:
        raise ValueError("estimates must match truth, up to a leading repetition axis")
    flat = estimates.reshape(len(estimates), -1) - truth.reshape(-1)[None, :]
    return float(np.mean(np.sum(flat**2, axis=1) / denom))


def kernel_metrics(K_est, K_gt, eps=0.1):
    """Entrywise agreement metrics: R^2, clamped relative errors, MSE, RMSE.

    The relative error of each entry uses the clamped denominator
    max(|truth|, eps). R^2 is 1 - SS_res / SS_tot over all entries.
    """
    K_est = np.asarray(K_est, dtype=np.float64)
    K_gt = np.asarray(K_gt, dtype=np.float64)
    if K_est.shape != K_gt.shape:
        raise ValueError("shape mismatch")
    if eps <= 0:
        raise ValueError("eps must be positive")
    resid = K_est - K_gt
    ss_tot = np.sum((K_gt - K_gt.mean()) ** 2)
    if ss_tot == 0:
        raise ValueError("constant ground truth: R^2 undefined")
    rel = np.abs(resid) / np.maximum(np.abs(K_gt), eps)
    mse = float(np.mean(resid**2))
    return {
        "r2": float(1.0 - np.sum(resid**2) / ss_tot),
        "mean_re": float(np.mean(rel)),
        "median_re": float(np.median(rel)),
        "mse": mse,
        "rmse": float(np.sqrt(mse)),
    }
