"""Random-walk signature vectors for power-series graph kernels.

A kernel matrix sum_k alpha_k W^k is estimated by dot products of sparse
non-negative signature vectors accumulated by random walkers. The walker
deposits ``load * f(walk_length)`` at every visited node, where the
modulation function ``f`` is the discrete self-deconvolution of the
coefficient sequence alpha: sum_{p=0}^{k} f(k-p) f(p) = alpha_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from manifoldrf._walker import walk_signatures
from manifoldrf.errors import (
    DeconvolutionError,
    SeriesDivergenceError,
    WalkerStuckError,
)

ALPHA_CUTOFF = 1e-300
_MAX_TERMS = 200_000


def heat_alpha(t, k_max=None, log_scale=0.0):
    """Coefficients alpha_k = exp(log_scale) * t^k / k! of exp(t M).

    The sequence is truncated once it falls below 1e-300 past its peak
    (k > t), or at ``k_max`` if given. ``log_scale`` premultiplies by
    exp(log_scale) without leaving log space, which keeps heavily
    downscaled sequences representable.
    """
    if t <= 0:
        raise ValueError("diffusion time must be positive")
    if k_max is not None and k_max < 0:
        raise ValueError("k_max must be >= 0")
    log_t = math.log(t)
    cutoff = math.log(ALPHA_CUTOFF)
    out = []
    k = 0
    while True:
        log_a = log_scale + k * log_t - math.lgamma(k + 1)
        if k > 0 and k > t and log_a < cutoff:
            break
        out.append(math.exp(log_a))
        if k_max is not None and k >= k_max:
            break
        if k >= _MAX_TERMS:
            raise ValueError("coefficient sequence did not truncate")
        k += 1
    return np.array(out)


def heat_modulation(t, k_max=None, log_scale=0.0):
    """Closed-form modulation f(k) = exp(log_scale/2) (t/2)^k / k!.

    This is the deconvolution of ``heat_alpha(t, log_scale=log_scale)``:
    the binomial identity sum_p C(k,p) = 2^k gives
    sum_p f(p) f(k-p) = exp(log_scale) t^k / k!.
    """
    if t <= 0:
        raise ValueError("diffusion time must be positive")
    log_half = math.log(t / 2.0)
    cutoff = math.log(ALPHA_CUTOFF)
    out = []
    k = 0
    while True:
        log_f = 0.5 * log_scale + k * log_half - math.lgamma(k + 1)
        if k > 0 and k > t / 2.0 and log_f < cutoff:
            break
        out.append(math.exp(log_f))
        if k_max is not None and k >= k_max:
            break
        if k >= _MAX_TERMS:
            raise ValueError("modulation sequence did not truncate")
        k += 1
    return np.array(out)


def grid_heat_modulation(sigma, d, n):
    """Modulation for estimating exp(-(sigma^2/2) L_n) on a wrap-around n^d grid.

    With unit weights and uniform degree 2d, the rescaled random-walk
    Laplacian gives exp(-t L_n) = e^{-lam} exp((lam/2d) A) for
    lam = sigma^2 d n^2 and t = sigma^2/2, so the coefficients are heat
    coefficients with rate lam/(2d), globally scaled by e^{-lam}. The
    scale enters through ``log_scale`` because e^{-lam} underflows on
    fine grids.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam = sigma * sigma * d * n * n
    return heat_modulation(lam / (2.0 * d), log_scale=-lam)


def deconvolve_alpha(alpha):
    """Solve sum_{p=0}^{k} f(k-p) f(p) = alpha_k by forward recursion.

    f(0) = sqrt(alpha_0); f(k) = (alpha_k - sum_{p=1}^{k-1} f(p) f(k-p)) / (2 f(0)).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or len(alpha) == 0:
        raise ValueError("alpha must be a non-empty 1-D sequence")
    if alpha[0] <= 0:
        raise DeconvolutionError("deconvolution undefined: alpha_0 must be positive")
    f = np.zeros_like(alpha)
    f[0] = math.sqrt(alpha[0])
    for k in range(1, len(alpha)):
        inner = np.dot(f[1:k], f[k - 1:0:-1]) if k >= 2 else 0.0
        f[k] = (alpha[k] - inner) / (2.0 * f[0])
    # past the peak, nonzero values below the alpha cutoff are rounding
    # noise from the cancellation in the recursion; exact zeros are kept
    peak = int(np.argmax(np.abs(f)))
    mags = np.abs(f[peak:])
    tail = np.nonzero((mags > 0.0) & (mags < ALPHA_CUTOFF))[0]
    if len(tail) > 0:
        f = f[: peak + tail[0]]
    return f


def self_convolve(f):
    """Discrete self-convolution of f, truncated to len(f) terms."""
    f = np.asarray(f, dtype=np.float64)
    return np.convolve(f, f)[: len(f)]


@dataclass(frozen=True)
class WalkConfig:
    """Monte Carlo walk budget: termination probability, walks per start, seed."""

    p_halt: float
    num_walks: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p_halt < 1.0:
            raise ValueError("p_halt must lie in (0, 1)")
        if self.num_walks < 1:
            raise ValueError("num_walks must be >= 1")


@dataclass
class SignatureSet:
    """Sparse non-negative signature vectors, one CSR row per start node."""

    num_nodes: int
    start_nodes: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_dense(cls, dense, start_nodes, num_nodes):
        dense = np.asarray(dense, dtype=np.float64)
        indptr = [0]
        idx_parts = []
        val_parts = []
        for row in dense:
            nz = np.nonzero(row)[0]
            idx_parts.append(nz)
            val_parts.append(row[nz])
            indptr.append(indptr[-1] + len(nz))
        return cls(
            num_nodes=num_nodes,
            start_nodes=np.asarray(start_nodes, dtype=np.int64),
            indptr=np.array(indptr, dtype=np.int64),
            indices=(np.concatenate(idx_parts) if idx_parts else np.empty(0, np.int64)).astype(np.int64),
            values=np.concatenate(val_parts) if val_parts else np.empty(0, np.float64),
        )

    @property
    def num_vectors(self):
        return len(self.start_nodes)

    def row(self, s):
        """Sparse entries of vector ``s`` as (node ids, values)."""
        lo, hi = self.indptr[s], self.indptr[s + 1]
        return self.indices[lo:hi], self.values[lo:hi]

    def to_sparse(self):
        return sp.csr_matrix(
            (self.values, self.indices, self.indptr),
            shape=(self.num_vectors, self.num_nodes),
        )

    def to_dense(self):
        return self.to_sparse().toarray()

    def scaled(self, factor):
        """New set with every entry multiplied by ``factor`` (> 0)."""
        return SignatureSet(
            num_nodes=self.num_nodes,
            start_nodes=self.start_nodes.copy(),
            indptr=self.indptr.copy(),
            indices=self.indices.copy(),
            values=self.values * float(factor),
        )


def _validate_modulation(f):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or len(f) == 0:
        raise ValueError("modulation function must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(f)):
        raise ValueError("modulation function must be finite")
    if np.any(f < 0):
        raise ValueError("this engine supports non-negative modulation functions only")
    nz = np.nonzero(f)[0]
    if len(nz) == 0:
        return f[:1]
    # contiguous-prefix support is what makes value tracking exact
    if nz[0] != 0 or np.any(f[: nz[-1] + 1] == 0.0):
        raise ValueError("modulation support must be a contiguous prefix starting at 0")
    return f[: nz[-1] + 1]


def run_grf(graph, modulation, config, start_nodes=None):
    """Sample signature vectors from ``start_nodes`` (default: every node).

    Walk semantics per step: deposit the current value at the current node,
    increment the walk length, pick one neighbor uniformly from the
    adjacency list, multiply the load by deg(cur)/(1 - p_halt) * W[cur,new],
    move, then draw the termination variable. The first deposit of f(0)
    therefore always lands on the start node. Vectors are averaged over
    ``config.num_walks`` walks.
    """
    f = _validate_modulation(modulation)
    if start_nodes is None:
        start_nodes = np.arange(graph.num_nodes, dtype=np.int64)
    else:
        start_nodes = np.asarray(start_nodes, dtype=np.int64)
        if np.any(start_nodes < 0) or np.any(start_nodes >= graph.num_nodes):
            raise ValueError("start node out of range")
    degrees = graph.unweighted_degrees
    if np.any(degrees[start_nodes] == 0):
        raise WalkerStuckError("start node has no neighbors")

    if f[0] == 0.0:  # all-zero modulation: every deposit is zero
        dense = np.zeros((len(start_nodes), graph.num_nodes))
        return SignatureSet.from_dense(dense, start_nodes, graph.num_nodes)

    f_ratio = f[1:] / f[:-1]
    out = np.zeros((len(start_nodes), graph.num_nodes))
    # bound the dense accumulation buffer, not the signature set itself
    block = max(1, int(3e7) // max(graph.num_nodes, 1))
    for lo in range(0, len(start_nodes), block):
        hi = min(len(start_nodes), lo + block)
        walk_signatures(
            graph.indptr, graph.indices, graph.weights,
            float(f[0]), f_ratio, float(config.p_halt),
            int(config.num_walks), np.uint64(config.seed),
            start_nodes[lo:hi], out[lo:hi],
        )
    return SignatureSet.from_dense(out, start_nodes, graph.num_nodes)


def estimate_kernel(sig_rows, sig_cols):
    """Gram matrix of signature dot products: entry (i, j) = <phi_i, phi_j>.

    Unbiasedness of the kernel estimate requires the two sets to come from
    independent walk randomness (different seeds); reusing one set biases
    the diagonal upward by the Monte Carlo variance.
    """
    if sig_rows.num_nodes != sig_cols.num_nodes:
        raise ValueError("signature sets live on different node universes")
    return np.asarray((sig_rows.to_sparse() @ sig_cols.to_sparse().T).todense())


def exact_kernel_series(W, alpha, rel_tol=1e-16):
    """Evaluate sum_k alpha_k W^k by iterated multiplication (dense oracle).

    Stops early once term max-norms are both decaying and below
    ``rel_tol`` times the accumulated max-norm. If the coefficient budget
    runs out while terms are still significant, the series is treated as
    divergent.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    alpha = np.asarray(alpha, dtype=np.float64)
    n = W.shape[0]
    acc = alpha[0] * np.eye(n)
    power = np.eye(n)
    prev_norm = np.inf
    term_norm = 0.0
    for k in range(1, len(alpha)):
        power = power @ W
        term = alpha[k] * power
        acc += term
        term_norm = np.max(np.abs(term))
        if not np.isfinite(term_norm):
            raise SeriesDivergenceError("series terms overflowed")
        if term_norm <= rel_tol * np.max(np.abs(acc)) and term_norm <= prev_norm:
            break
        prev_norm = term_norm
    else:
        if len(alpha) > 1 and term_norm > 1e-12 * np.max(np.abs(acc)):
            raise SeriesDivergenceError(
                "coefficients exhausted while terms were still significant"
            )
    symmetric = np.allclose(W, W.T, atol=1e-12)
    return 0.5 * (acc + acc.T) if symmetric else acc
