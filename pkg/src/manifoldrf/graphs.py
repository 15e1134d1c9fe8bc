"""Weighted graph construction: kNN graphs on point clouds, wrap-around grids,
Laplacians, normalized affinities, and geodesic (shortest-path) distances."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from manifoldrf.errors import (
    DuplicatePointError,
    GridContractError,
    IsolatedNodeError,
)

MAX_GRID_NODES = 10_000_000


@dataclass
class WeightedGraph:
    """Symmetric non-negative weighted graph in CSR layout.

    Every undirected edge (i, j, w) is stored twice, once per endpoint.
    ``points`` optionally carries the embedding coordinates the graph was
    built from (used for geodesic edge lengths). ``grid_shape`` is set for
    wrap-around grid graphs and enables the grid-only operations.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    points: np.ndarray | None = None
    grid_shape: tuple | None = None
    connected: bool = True
    sigma_sq: float | None = None
    _extras: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(cls, num_nodes, edges_i, edges_j, edge_weights, points=None,
                   **kwargs):
        """Build a graph from undirected edges given once each.

        Symmetrizes, drops nothing: zero/negative weights and self-loops are
        rejected rather than silently filtered.
        """
        edges_i = np.asarray(edges_i, dtype=np.int64)
        edges_j = np.asarray(edges_j, dtype=np.int64)
        edge_weights = np.asarray(edge_weights, dtype=np.float64)
        if np.any(edges_i == edges_j):
            raise ValueError("self-loops are not allowed")
        if np.any(edge_weights <= 0) or not np.all(np.isfinite(edge_weights)):
            raise ValueError("edge weights must be positive and finite")
        rows = np.concatenate([edges_i, edges_j])
        cols = np.concatenate([edges_j, edges_i])
        vals = np.concatenate([edge_weights, edge_weights])
        adj = sp.csr_matrix((vals, (rows, cols)), shape=(num_nodes, num_nodes))
        adj.sum_duplicates()
        adj.sort_indices()
        ncomp = connected_components(adj, directed=False, return_labels=False)
        return cls(
            num_nodes=num_nodes,
            indptr=adj.indptr.astype(np.int64),
            indices=adj.indices.astype(np.int64),
            weights=adj.data.astype(np.float64),
            points=None if points is None else np.asarray(points, dtype=np.float64),
            connected=(ncomp == 1),
            **kwargs,
        )

    @property
    def unweighted_degrees(self):
        """Number of out-neighbors per node."""
        return np.diff(self.indptr).astype(np.int64)

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return len(self.indices) // 2

    def neighbors(self, i):
        """Return (neighbor ids, weights) of node ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def to_sparse(self):
        return sp.csr_matrix(
            (self.weights, self.indices, self.indptr),
            shape=(self.num_nodes, self.num_nodes),
        )

    def to_dense(self):
        return self.to_sparse().toarray()

    def edge_list(self):
        """Undirected edges as (i, j, w) with i < j, each reported once."""
        out = []
        for i in range(self.num_nodes):
            nbrs, ws = self.neighbors(i)
            for j, w in zip(nbrs, ws):
                if i < j:
                    out.append((i, int(j), float(w)))
        return out


def build_knn_graph(points, k, sigma_sq=None):
    """Symmetrized k-nearest-neighbor graph with Gaussian edge weights.

    Each point is connected to its ``k`` nearest neighbors; the undirected
    edge set is the union over both directions. Weights are
    exp(-||x_i - x_j||^2 / sigma^2). When ``sigma_sq`` is None the bandwidth
    is the median squared edge length over the final (symmetrized) edge set.

    Ties at equal distance break toward the lower node index. Duplicate
    points (zero-length candidate edges) raise; a disconnected result only
    warns and sets ``connected=False``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a non-empty (N, D) array")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    n = len(points)
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N, got k={k}, N={n}")
    if sigma_sq is not None and sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")

    sq_norms = np.einsum("ij,ij->i", points, points)
    rows = []
    cols = []
    chunk = max(1, int(2e7) // max(n, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d2 = sq_norms[lo:hi, None] + sq_norms[None, :] - 2.0 * points[lo:hi] @ points.T
        np.maximum(d2, 0.0, out=d2)
        idx = np.arange(lo, hi)
        d2[np.arange(hi - lo), idx] = np.inf
        # stable argsort => lower index wins ties
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        sel = d2[np.arange(hi - lo)[:, None], order]
        if np.any(sel <= 0.0):
            raise DuplicatePointError("duplicate points produce zero-distance edges")
        rows.append(np.repeat(idx, k))
        cols.append(order.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)

    # union symmetrization on (min, max) pairs
    a = np.minimum(rows, cols)
    b = np.maximum(rows, cols)
    keys = np.unique(a * np.int64(n) + b)
    ei = keys // n
    ej = keys % n
    lengths_sq = np.einsum("ij,ij->i", points[ei] - points[ej], points[ei] - points[ej])
    used_sigma = float(np.median(lengths_sq)) if sigma_sq is None else float(sigma_sq)
    w = np.exp(-lengths_sq / used_sigma)
    graph = WeightedGraph.from_edges(n, ei, ej, w, points=points)
    graph.sigma_sq = used_sigma
    if not graph.connected:
        warnings.warn("kNN graph is disconnected", stacklevel=2)
    return graph


def build_grid_graph(n, d):
    """Wrap-around grid graph on n^d nodes with unit weights.

    Nodes are multi-indices (k_1, ..., k_d), k_j in {0, ..., n-1}, flattened
    row-major; each node connects to its 2d wrap-around nearest neighbors.
    Node coordinates k/n in [0, 1)^d are attached as ``points``.
    """
    if n < 3:
        raise ValueError("grid side length must be >= 3")
    if d < 1:
        raise ValueError("grid dimension must be >= 1")
    total = n**d
    if total > MAX_GRID_NODES:
        raise ValueError(f"grid of {total} nodes exceeds the supported size")

    flat = np.arange(total, dtype=np.int64)
    ei = []
    ej = []
    stride = 1
    for axis in range(d - 1, -1, -1):
        coord = (flat // stride) % n
        fwd = flat + ((coord + 1) % n - coord) * stride
        ei.append(flat)
        ej.append(fwd)
        stride *= n
    ei = np.concatenate(ei)
    ej = np.concatenate(ej)
    w = np.ones(len(ei))
    coords = grid_coordinates(n, d)
    graph = WeightedGraph.from_edges(total, ei, ej, w, points=coords,
                                     grid_shape=(n,) * d)
    return graph


def grid_coordinates(n, d):
    """Grid-node positions k/n in [0, 1)^d, row-major flattening."""
    total = n**d
    flat = np.arange(total, dtype=np.int64)
    cols = []
    stride = 1
    for axis in range(d - 1, -1, -1):
        cols.append((flat // stride) % n)
        stride *= n
    return np.stack(cols[::-1], axis=1) / float(n)


def rescaled_random_walk_laplacian(graph):
    """Dense rescaled random-walk Laplacian (2d/h^2)(I - T) of a grid graph.

    T averages over the 2d wrap-around neighbors and h = 1/n. Row sums are
    exactly zero (constants are annihilated).
    """
    if graph.grid_shape is None:
        raise GridContractError("rescaled Laplacian requires a wrap-around grid graph")
    n = graph.grid_shape[0]
    d = len(graph.grid_shape)
    T = graph.to_dense() / (2.0 * d)
    scale = 2.0 * d * n * n
    return scale * (np.eye(graph.num_nodes) - T)


def symmetric_normalized_affinity(W):
    """D^{-1/2} W D^{-1/2} with D the (weighted) degree matrix of W.

    Accepts a dense symmetric non-negative matrix or a WeightedGraph. The
    result is symmetric with spectrum in [-1, 1].
    """
    if isinstance(W, WeightedGraph):
        W = W.to_dense()
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if not np.allclose(W, W.T, atol=1e-12):
        raise ValueError("W must be symmetric")
    if np.any(W < 0):
        raise ValueError("W must be non-negative")
    deg = W.sum(axis=1)
    if np.any(deg <= 0):
        raise IsolatedNodeError("zero-degree node: normalized affinity undefined")
    inv_sqrt = 1.0 / np.sqrt(deg)
    Wf = W * inv_sqrt[:, None] * inv_sqrt[None, :]
    return 0.5 * (Wf + Wf.T)


def normalized_walk_graph(graph):
    """Same structure with symmetrically normalized weights w_ij / sqrt(d_i d_j).

    Sparse counterpart of ``symmetric_normalized_affinity`` for use as a
    random-walk substrate; avoids materializing the dense matrix.
    """
    adj = graph.to_sparse()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    if np.any(deg <= 0):
        raise IsolatedNodeError("zero-degree node: normalized affinity undefined")
    inv_sqrt = 1.0 / np.sqrt(deg)
    row_of_slot = np.repeat(np.arange(graph.num_nodes), np.diff(graph.indptr))
    new_weights = graph.weights * inv_sqrt[row_of_slot] * inv_sqrt[graph.indices]
    return WeightedGraph(
        num_nodes=graph.num_nodes,
        indptr=graph.indptr.copy(),
        indices=graph.indices.copy(),
        weights=new_weights,
        points=graph.points,
        grid_shape=graph.grid_shape,
        connected=graph.connected,
    )


def geodesic_distances(graph, sources):
    """Shortest-path distances over Euclidean edge lengths.

    Edge lengths come from the stored point coordinates, not from the
    Gaussian weights. Returns an (S, N) array for a sequence of sources or
    (N,) for a single source; unreachable nodes get ``inf``.
    """
    if graph.points is None:
        raise ValueError("graph has no point coordinates for edge lengths")
    single = np.isscalar(sources)
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    if np.any(src < 0) or np.any(src >= graph.num_nodes):
        raise ValueError("source node out of range")
    diffs = graph.points[np.repeat(np.arange(graph.num_nodes), np.diff(graph.indptr))] \
        - graph.points[graph.indices]
    lengths = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    adj = sp.csr_matrix((lengths, graph.indices, graph.indptr),
                        shape=(graph.num_nodes, graph.num_nodes))
    dist = dijkstra(adj, directed=False, indices=src)
    return dist[0] if single else dist


def save_graph(graph, path):
    """Write the line format: header ``N M`` then ``i j w`` per undirected edge."""
    edges = graph.edge_list()
    with open(path, "w") as fh:
        fh.write(f"{graph.num_nodes} {len(edges)}\n")
        for i, j, w in edges:
            fh.write(f"{i} {j} {w!r}\n")


def load_graph(path):
    with open(path) as fh:
        header = fh.readline().split()
        n, m = int(header[0]), int(header[1])
        ei = np.empty(m, dtype=np.int64)
        ej = np.empty(m, dtype=np.int64)
        w = np.empty(m, dtype=np.float64)
        for row in range(m):
            parts = fh.readline().split()
            ei[row], ej[row], w[row] = int(parts[0]), int(parts[1]), float(parts[2])
    return WeightedGraph.from_edges(n, ei, ej, w)
