"""Mesh ingestion, normals, densification, and field transfer."""

import numpy as np
import pytest
from scipy import stats

from manifoldrf.meshes import (
    Mesh,
    cloth_grid_mesh,
    densify_mesh,
    load_mesh,
    mesh_edge_graph,
    save_mesh,
    torus_mesh,
    transfer_field,
    vertex_normals,
)


def single_triangle():
    return Mesh(
        vertices=np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        faces=np.array([[0, 1, 2]]),
    )


class TestLoadMesh:
    def test_single_triangle(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        mesh = load_mesh(path)
        assert mesh.num_vertices == 3
        assert mesh.num_faces == 1

    def test_zero_area_face_filtered(self, tmp_path):
        path = tmp_path / "degen.obj"
        path.write_text(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\n"
            "f 1 2 3\nf 1 2 4\n"  # second face is collinear
        )
        mesh = load_mesh(path)
        assert mesh.num_faces == 1

    def test_quad_fan_triangulation(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ValueError, match="non-triangular"):
            load_mesh(path)
        mesh = load_mesh(path, triangulate_quads=True)
        assert mesh.num_faces == 2

    def test_slash_indices(self, tmp_path):
        path = tmp_path / "vt.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n")
        assert load_mesh(path).num_faces == 1

    def test_roundtrip(self, tmp_path):
        mesh = torus_mesh(8, 6)
        save_mesh(mesh, tmp_path / "t.obj")
        again = load_mesh(tmp_path / "t.obj")
        np.testing.assert_allclose(again.vertices, mesh.vertices)
        np.testing.assert_array_equal(again.faces, mesh.faces)


class TestVertexNormals:
    def test_planar_triangle(self):
        normals = vertex_normals(single_triangle())
        np.testing.assert_allclose(normals, [[0.0, 0.0, 1.0]] * 3, atol=1e-15)

    def test_tetrahedron_points_outward(self):
        verts = np.array([
            [1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0],
        ])
        faces = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
        mesh = Mesh(vertices=verts, faces=faces)
        normals = vertex_normals(mesh)
        centroid = verts.mean(axis=0)
        outward = verts - centroid
        outward /= np.linalg.norm(outward, axis=1, keepdims=True)
        np.testing.assert_allclose(np.abs(np.sum(normals * outward, axis=1)),
                                   1.0, atol=1e-12)

    def test_unit_norms(self):
        normals = vertex_normals(torus_mesh(20, 14))
        np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0,
                                   atol=1e-12)

    def test_isolated_vertex_flagged(self):
        mesh = single_triangle()
        mesh.vertices = np.vstack([mesh.vertices, [[5.0, 5.0, 5.0]]])
        with pytest.raises(ValueError, match="zero normal"):
            vertex_normals(mesh)


class TestDensify:
    def test_noop_returns_vertices(self):
        mesh = single_triangle()
        cloud = densify_mesh(mesh, mesh.num_vertices, seed=0)
        np.testing.assert_array_equal(cloud.points, mesh.vertices)
        assert len(cloud.face_ids) == 0

    def test_added_points_inside_triangle(self):
        mesh = single_triangle()
        cloud = densify_mesh(mesh, 1003, seed=1)
        added = cloud.points[3:]
        assert np.all(added[:, 0] >= 0) and np.all(added[:, 1] >= 0)
        assert np.all(added[:, 0] + added[:, 1] <= 1.0 + 1e-12)
        assert np.all(cloud.bary >= 0)
        np.testing.assert_allclose(cloud.bary.sum(axis=1), 1.0, atol=1e-12)

    def test_area_weighted_face_selection(self):
        """3:1 area ratio draws faces at 0.75 / 0.25 within +-0.01."""
        verts = np.array([
            [0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 2.0, 0.0],
            [10.0, 0.0, 0.0], [11.0, 0.0, 0.0], [10.0, 2.0, 0.0],
        ])
        faces = np.array([[0, 1, 2], [3, 4, 5]])  # areas 3 and 1
        mesh = Mesh(vertices=verts, faces=faces)
        cloud = densify_mesh(mesh, 6 + 40_000, seed=2)
        frac = np.mean(cloud.face_ids == 0)
        assert abs(frac - 0.75) < 0.01

    def test_chi_square_area_distribution(self):
        """Face-selection counts match the area law on a 10-face mesh."""
        rng = np.random.default_rng(3)
        verts = rng.normal(size=(30, 3))
        faces = np.arange(30).reshape(10, 3)
        mesh = Mesh(vertices=verts, faces=faces)
        n_samples = 100_000
        cloud = densify_mesh(mesh, 30 + n_samples, seed=4)
        counts = np.bincount(cloud.face_ids, minlength=10)
        areas = mesh.face_areas()
        expected = n_samples * areas / areas.sum()
        _, p_value = stats.chisquare(counts, expected)
        assert p_value > 0.01

    def test_requires_enough_points(self):
        with pytest.raises(ValueError):
            densify_mesh(single_triangle(), 2)


class TestTransferField:
    def test_constant_field(self):
        cloud = densify_mesh(single_triangle(), 200, seed=5)
        out = transfer_field(cloud, np.full((3, 3), 2.5))
        np.testing.assert_allclose(out, 2.5)

    def test_corner_weight_recovers_vertex_value(self):
        mesh = single_triangle()
        cloud = densify_mesh(mesh, 4, seed=6)
        cloud.bary[0] = np.array([1.0, 0.0, 0.0])
        field = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])
        out = transfer_field(cloud, field)
        corner = mesh.faces[cloud.face_ids[0]][0]
        np.testing.assert_allclose(out[3], field[corner])

    def test_exact_on_linear_fields(self):
        mesh = torus_mesh(10, 8)
        cloud = densify_mesh(mesh, 500, seed=7)
        A = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [2.0, 0.0, 1.0]])
        out = transfer_field(cloud, mesh.vertices @ A)
        np.testing.assert_allclose(out, cloud.points @ A, atol=1e-12)

    def test_scalar_field(self):
        cloud = densify_mesh(single_triangle(), 50, seed=8)
        out = transfer_field(cloud, np.array([1.0, 2.0, 3.0]))
        assert out.shape == (50,)
        assert np.all(out >= 1.0) and np.all(out <= 3.0)

    def test_size_mismatch(self):
        cloud = densify_mesh(single_triangle(), 10, seed=9)
        with pytest.raises(ValueError):
            transfer_field(cloud, np.ones(5))


class TestPointCloudCsv:
    def test_roundtrip(self, tmp_path):
        from manifoldrf.io import load_points_csv, save_points_csv

        pts = np.random.default_rng(30).normal(size=(17, 3))
        save_points_csv(pts, tmp_path / "pts.csv")
        again = load_points_csv(tmp_path / "pts.csv")
        np.testing.assert_array_equal(again, pts)


class TestSyntheticMeshes:
    def test_torus_closed_and_regular(self):
        mesh = torus_mesh(12, 9)
        assert mesh.num_vertices == 108
        assert mesh.num_faces == 216
        # closed surface: every edge shared by exactly two faces
        edges = mesh.edge_set()
        assert len(edges) == mesh.num_faces * 3 // 2

    def test_cloth_has_velocities(self):
        mesh = cloth_grid_mesh(12, 8)
        assert mesh.velocities is not None
        assert mesh.velocities.shape == (96, 3)
        assert np.all(np.isfinite(mesh.velocities))

    def test_mesh_edge_graph_median_bandwidth(self):
        mesh = torus_mesh(10, 8)
        graph = mesh_edge_graph(mesh)
        edges = mesh.edge_set()
        lengths_sq = np.sum(
            (mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]]) ** 2, axis=1)
        assert graph.sigma_sq == pytest.approx(np.median(lengths_sq))
        assert graph.num_edges == len(edges)
