"""Triangle meshes: OBJ-subset ingestion, vertex normals, area-weighted
densification with barycentric provenance, and synthetic test meshes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEGENERATE_AREA = 1e-12


@dataclass
class Mesh:
    """Triangle mesh with optional per-vertex fields."""

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray | None = None
    velocities: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be (V, 3)")
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_faces(self):
        return len(self.faces)

    def face_cross_products(self):
        """Unnormalized face normals (cross products); norm = 2 * area."""
        v0 = self.vertices[self.faces[:, 0]]
        v1 = self.vertices[self.faces[:, 1]]
        v2 = self.vertices[self.faces[:, 2]]
        return np.cross(v1 - v0, v2 - v0)

    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_cross_products(), axis=1)

    def edge_set(self):
        """Unique undirected edges induced by the faces, as (i, j) with i < j."""
        f = self.faces
        pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        a = pairs.min(axis=1)
        b = pairs.max(axis=1)
        keys = np.unique(a * np.int64(self.num_vertices) + b)
        return np.column_stack([keys // self.num_vertices, keys % self.num_vertices])


def _filter_degenerate(vertices, faces):
    mesh = Mesh(vertices=vertices, faces=faces)
    if mesh.num_faces == 0:
        return mesh
    keep = mesh.face_areas() >= DEGENERATE_AREA
    mesh.faces = mesh.faces[keep]
    return mesh


def load_mesh(path, triangulate_quads=False):
    """Parse an OBJ-subset file: ``v x y z`` and ``f i j k [l]`` lines.

    Face tokens may carry ``/vt/vn`` suffixes (ignored); indices are
    1-based. Quads become two fan triangles when ``triangulate_quads`` is
    set and are rejected otherwise. Zero-area faces are dropped.
    """
    verts = []
    faces = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if tokens[0] == "v":
                if len(tokens) < 4:
                    raise ValueError(f"{path}:{lineno}: malformed vertex line")
                verts.append([float(x) for x in tokens[1:4]])
            elif tokens[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in tokens[1:]]
                if len(idx) == 3:
                    faces.append(idx)
                elif len(idx) == 4 and triangulate_quads:
                    faces.append([idx[0], idx[1], idx[2]])
                    faces.append([idx[0], idx[2], idx[3]])
                else:
                    raise ValueError(
                        f"{path}:{lineno}: non-triangular face "
                        "(pass triangulate_quads=True for quads)"
                    )
    if not verts:
        raise ValueError(f"{path}: no vertices found")
    return _filter_degenerate(
        np.array(verts, dtype=np.float64),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
    )


def save_mesh(mesh, path):
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def vertex_normals(mesh):
    """Unit vertex normals from accumulated incident face cross products.

    The raw cross products carry the face area, so the accumulation is
    implicitly area-weighted. Vertices with zero accumulated normal
    (isolated, or exactly cancelling faces) are an error.
    """
    cross = mesh.face_cross_products()
    acc = np.zeros_like(mesh.vertices)
    for corner in range(3):
        np.add.at(acc, mesh.faces[:, corner], cross)
    norms = np.linalg.norm(acc, axis=1)
    bad = np.nonzero(norms < 1e-300)[0]
    if len(bad) > 0:
        raise ValueError(f"zero normal accumulation at vertices {bad[:10].tolist()}")
    return acc / norms[:, None]


@dataclass
class DensifiedCloud:
    """Mesh vertices plus area-weighted face samples with barycentric provenance.

    The first ``num_base`` points are the original vertices; each added
    point stores its source face and simplex weights so any per-vertex
    field transfers by the same convex combination.
    """

    base_mesh: Mesh
    points: np.ndarray
    face_ids: np.ndarray
    bary: np.ndarray

    @property
    def num_base(self):
        return self.base_mesh.num_vertices

    @property
    def num_points(self):
        return len(self.points)


def densify_mesh(mesh, n_dense, seed=0):
    """Add ``n_dense - |V|`` points: faces drawn with probability
    proportional to area, positions uniform on each triangle."""
    if n_dense < mesh.num_vertices:
        raise ValueError("n_dense must be at least the vertex count")
    n_add = n_dense - mesh.num_vertices
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas()
    probs = areas / areas.sum()
    face_ids = rng.choice(mesh.num_faces, size=n_add, p=probs)
    # sqrt trick: uniform on the 2-simplex
    r1 = rng.random(n_add)
    r2 = rng.random(n_add)
    s = np.sqrt(r1)
    bary = np.column_stack([1.0 - s, s * (1.0 - r2), s * r2])
    corners = mesh.vertices[mesh.faces[face_ids]]
    added = np.einsum("ij,ijk->ik", bary, corners)
    return DensifiedCloud(
        base_mesh=mesh,
        points=np.vstack([mesh.vertices, added]),
        face_ids=face_ids,
        bary=bary,
    )


def transfer_field(cloud, values):
    """Extend a per-vertex field to the densified cloud by the stored
    barycentric weights; original vertices keep their values exactly."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) != cloud.num_base:
        raise ValueError("field must be defined on all base vertices")
    corner_vals = values[cloud.base_mesh.faces[cloud.face_ids]]
    added = np.einsum("ij,ij...->i...", cloud.bary, corner_vals)
    return np.concatenate([values, added])


def mesh_edge_graph(mesh, sigma_sq=None):
    """Weighted graph over the face-induced mesh edges.

    Gaussian weights exp(-||x_i - x_j||^2 / sigma^2) with the bandwidth
    defaulting to the median squared edge length.
    """
    from manifoldrf.graphs import WeightedGraph

    edges = mesh.edge_set()
    diffs = mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]]
    lengths_sq = np.einsum("ij,ij->i", diffs, diffs)
    used = float(np.median(lengths_sq)) if sigma_sq is None else float(sigma_sq)
    if used <= 0:
        raise ValueError("bandwidth must be positive")
    w = np.exp(-lengths_sq / used)
    graph = WeightedGraph.from_edges(mesh.num_vertices, edges[:, 0], edges[:, 1],
                                     w, points=mesh.vertices)
    graph.sigma_sq = used
    return graph


def torus_mesh(n_u, n_v, big_radius=2.0, small_radius=0.7):
    """Closed torus mesh on a periodic (n_u, n_v) parameter grid."""
    if n_u < 3 or n_v < 3:
        raise ValueError("need at least 3 samples per angle")
    u = np.linspace(0.0, 2.0 * math.pi, n_u, endpoint=False)
    v = np.linspace(0.0, 2.0 * math.pi, n_v, endpoint=False)
    U, V = np.meshgrid(u, v, indexing="ij")
    ring = big_radius + small_radius * np.cos(V)
    verts = np.column_stack([
        (ring * np.cos(U)).ravel(),
        (ring * np.sin(U)).ravel(),
        (small_radius * np.sin(V)).ravel(),
    ])
    faces = []
    for i in range(n_u):
        for j in range(n_v):
            a = i * n_v + j
            b = ((i + 1) % n_u) * n_v + j
            c = ((i + 1) % n_u) * n_v + (j + 1) % n_v
            d = i * n_v + (j + 1) % n_v
            faces.append([a, b, c])
            faces.append([a, c, d])
    return Mesh(vertices=verts, faces=np.array(faces, dtype=np.int64))


def cloth_grid_mesh(n_x, n_y, size_x=2.0, size_y=1.0, ripple=0.15, seed=0):
    """Open rippled cloth sheet with a smooth synthetic velocity field.

    Stand-in for a simulated flag mesh: a triangulated (n_x, n_y) grid,
    displaced by a smooth height wave, carrying per-vertex velocities that
    vary smoothly over the sheet.
    """
    if n_x < 2 or n_y < 2:
        raise ValueError("need at least a 2 x 2 grid")
    xs = np.linspace(0.0, size_x, n_x)
    ys = np.linspace(0.0, size_y, n_y)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = ripple * np.sin(2.0 * math.pi * X / size_x) * np.cos(math.pi * Y / size_y)
    verts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    faces = []
    for i in range(n_x - 1):
        for j in range(n_y - 1):
            a = i * n_y + j
            b = (i + 1) * n_y + j
            c = (i + 1) * n_y + j + 1
            d = i * n_y + j + 1
            faces.append([a, b, c])
            faces.append([a, c, d])
    mesh = Mesh(vertices=verts, faces=np.array(faces, dtype=np.int64))
    phase = 2.0 * math.pi * (X / size_x + 0.5 * Y / size_y)
    mesh.velocities = np.column_stack([
        (0.3 * np.sin(phase)).ravel(),
        (0.2 * np.cos(phase)).ravel(),
        (0.5 * np.sin(phase + 0.7)).ravel(),
    ])
    return mesh
