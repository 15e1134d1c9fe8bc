"""Compiled random-walk inner loop.

Each walker owns a splitmix64 stream derived from (seed, start node, walk
index), so signature vectors are bit-reproducible for any thread count:
start nodes are independent rows and walks within a row always accumulate
in walk order on one thread.

The walker tracks ``value = load * f(walk_length)`` directly instead of the
raw load. The two are related by the per-step factor
``deg(cur)/(1-p_halt) * W[cur,new] * f(k+1)/f(k)``, which keeps intermediate
quantities representable even when ``f(0)`` is hundreds of orders of
magnitude below the peak of ``f`` (long-diffusion-time regimes). This
requires the support of ``f`` to be a contiguous prefix, which the wrapper
enforces. Once value underflows to exactly zero, or the walk outlives the
support of ``f``, every remaining deposit would be zero, so the walk stops.
"""

import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_A = np.uint64(0xD1342543DE82EF95)
_STREAM_B = np.uint64(0xDB4F0B9175AE2165)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _finalize(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, start, walk):
    s = _finalize(seed ^ (np.uint64(start) * _STREAM_A))
    return _finalize(s ^ (np.uint64(walk) * _STREAM_B))


@njit(cache=True, inline="always")
def _next_unit(state):
    """Advance the splitmix64 counter; return (state, uniform in [0, 1))."""
    state = state + _GOLDEN
    z = _finalize(state)
    return state, np.float64(z >> np.uint64(11)) * _INV_2_53


@njit(cache=True, parallel=True)
def walk_signatures(indptr, indices, weights, f0, f_ratio, p_halt,
                    num_walks, seed, start_nodes, out):
    """Accumulate signature vectors for ``start_nodes`` into ``out`` (S, N).

    Per walk: deposit value at the current node, increment the length,
    move to a uniformly chosen neighbor while rescaling the value, then
    draw the termination variable. Rows are averaged over ``num_walks``.
    """
    inv_keep = 1.0 / (1.0 - p_halt)
    support = f_ratio.shape[0] + 1
    seed_u = np.uint64(seed)
    for s in prange(start_nodes.shape[0]):
        row = out[s]
        start = start_nodes[s]
        for w in range(num_walks):
            state = _stream_init(seed_u, start, w)
            value = f0
            cur = start
            length = 0
            while True:
                row[cur] += value
                length += 1
                if length >= support:
                    break
                lo = indptr[cur]
                deg = indptr[cur + 1] - lo
                state, u = _next_unit(state)
                slot = lo + np.int64(u * deg)
                value *= deg * weights[slot] * inv_keep * f_ratio[length - 1]
                cur = indices[slot]
                if value == 0.0:
                    break
                state, u = _next_unit(state)
                if u < p_halt:
                    break
        inv_m = 1.0 / num_walks
        for j in range(row.shape[0]):
            row[j] *= inv_m
