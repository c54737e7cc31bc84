import numpy as np
import pytest

from lapsmooth.config import GraphOptions
from lapsmooth.core import graph as graph_module
from lapsmooth.core.graph import (
    NeighborhoodGraph,
    PointCloud,
    apply_laplacian,
    build_graph,
    dense_laplacian,
    export_edge_list,
    graph_diagnostics,
    laplacian_quadratic_form,
)
from lapsmooth.core.kernels import KernelSpec
from lapsmooth.exceptions import InputError


def test_three_point_line_graph():
    kernel = KernelSpec("uniform", dimension=1)
    g = build_graph(np.array([[0.0], [0.5], [2.0]]), 1.0, kernel)

    assert g.weights[0, 1] == pytest.approx(0.5)
    assert g.weights[1, 0] == g.weights[0, 1]
    assert g.weights[0, 2] == 0.0
    assert g.edge_count == 1
    assert np.allclose(g.degrees, [0.5, 0.5, 0.0])
    assert g.components[0] == 2
    assert not g.connected


def test_pair_at_exact_radius_is_connected():
    kernel = KernelSpec("uniform", dimension=1)
    g = build_graph(np.array([[0.0], [0.25]]), 0.25, kernel)

    assert g.edge_count == 1


@pytest.mark.parametrize("instance", range(20))
def test_kdtree_build_matches_exhaustive_build(instance):
    rng = np.random.default_rng(1000 + instance)
    d = 1 + instance % 3
    n = int(rng.integers(50, 501))
    points = rng.random((n, d))
    r = float(rng.uniform(0.05, 0.3))
    kernel = KernelSpec("truncated-gaussian", dimension=d)

    tree_graph = build_graph(points, r, kernel, method="kdtree")
    brute_graph = build_graph(points, r, kernel, method="brute")

    assert (tree_graph.weights != brute_graph.weights).nnz == 0
    assert np.array_equal(tree_graph.degrees, brute_graph.degrees)


@pytest.mark.parametrize("options, expected", [
    (GraphOptions(brute_force_below=1000, leaf_size=8), ("brute", 8)),
    (GraphOptions(brute_force_below=0, leaf_size=4), ("kdtree", 4)),
])
def test_graph_options_choose_the_neighbor_search(options, expected, monkeypatch):
    seen = []
    search = graph_module._candidate_pairs

    def recording_search(points, r, method, leaf_size):
        seen.append((method, leaf_size))
        return search(points, r, method, leaf_size)

    monkeypatch.setattr(graph_module, "_candidate_pairs", recording_search)
    points = np.random.default_rng(8).random((120, 2))
    kernel = KernelSpec("uniform", dimension=2)

    g = build_graph(points, 0.2, kernel, options=options)

    assert seen == [expected]
    assert (g.weights != build_graph(points, 0.2, kernel).weights).nnz == 0


def test_fifty_points_in_square_match_pairwise_build():
    rng = np.random.default_rng(50)
    points = rng.random((50, 2))
    kernel = KernelSpec("uniform", dimension=2)

    tree_graph = build_graph(points, 0.3, kernel, method="kdtree")
    dense = np.zeros((50, 50))
    for i in range(50):
        for j in range(50):
            if i != j and np.linalg.norm(points[i] - points[j]) <= 0.3:
                dense[i, j] = kernel.normalization

    assert np.array_equal(tree_graph.weights.toarray(), dense)


@pytest.mark.parametrize("instance", range(50))
def test_quadratic_form_matches_dense_laplacian(instance, random_weight_graph):
    rng = np.random.default_rng(instance)
    n = int(rng.integers(2, 101))
    g = random_weight_graph(n)
    f = rng.standard_normal(n)

    dense = float(f @ dense_laplacian(g) @ f)

    assert laplacian_quadratic_form(g, f) == pytest.approx(dense, abs=1e-10)


def test_apply_laplacian_matches_dense(random_weight_graph, rng):
    g = random_weight_graph(20)
    f = rng.standard_normal(20)

    assert np.allclose(apply_laplacian(g, f), dense_laplacian(g) @ f, atol=1e-12)


def test_constants_are_in_the_null_space(unit_square_graph):
    ones = np.ones(unit_square_graph.n)

    assert np.allclose(apply_laplacian(unit_square_graph, ones), 0.0, atol=1e-12)
    assert laplacian_quadratic_form(unit_square_graph, 3.0 * ones) == 0.0


def test_quadratic_form_is_nonnegative(unit_square_graph, rng):
    for _ in range(5):
        assert laplacian_quadratic_form(unit_square_graph, rng.standard_normal(unit_square_graph.n)) >= 0


def test_from_weights_rejects_asymmetric_matrix():
    with pytest.raises(InputError):
        NeighborhoodGraph.from_weights(np.array([[0.0, 1.0], [0.5, 0.0]]))


def test_from_weights_rejects_negative_weights():
    with pytest.raises(InputError):
        NeighborhoodGraph.from_weights(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_from_weights_drops_diagonal():
    g = NeighborhoodGraph.from_weights(np.array([[5.0, 1.0], [1.0, 5.0]]))

    assert g.weights[0, 0] == 0.0
    assert np.allclose(g.degrees, [1.0, 1.0])


def test_kernel_dimension_must_match_points():
    with pytest.raises(InputError):
        build_graph(np.random.default_rng(0).random((10, 2)), 0.5, KernelSpec("uniform", dimension=3))


def test_manifold_cloud_accepts_intrinsic_kernel():
    theta = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    cloud = PointCloud(points=np.column_stack([np.cos(theta), np.sin(theta), np.zeros(40)]), intrinsic_dim=1)

    g = build_graph(cloud, 0.2, KernelSpec("uniform", dimension=1))

    assert g.connected
    assert g.edge_count == 40


def test_invalid_radius_and_method():
    points = np.random.default_rng(0).random((5, 1))
    kernel = KernelSpec("uniform", dimension=1)
    with pytest.raises(InputError):
        build_graph(points, 0.0, kernel)
    with pytest.raises(InputError):
        build_graph(points, 0.5, kernel, method="ball-tree")


def test_point_cloud_rejects_non_finite_coordinates():
    with pytest.raises(InputError):
        PointCloud(points=np.array([[0.0], [np.nan]]))


def test_diagnostics_report_degree_bound(unit_square_graph):
    diagnostics = graph_diagnostics(unit_square_graph, p_max=1.0)

    assert diagnostics.n == 120
    assert diagnostics.edge_count == unit_square_graph.edge_count
    assert diagnostics.degree_bound == pytest.approx(2.0 * 120 * 0.25 ** 2)
    assert diagnostics.max_degree == pytest.approx(unit_square_graph.degrees.max())


def test_diagnostics_sample_function_seminorms(rng, uniform_kernel_2d):
    points = rng.random((60, 2))
    g = build_graph(points, 0.3, uniform_kernel_2d)

    diagnostics = graph_diagnostics(
        g,
        functions={"constant": lambda x: np.ones(len(x)), "first": lambda x: x[:, 0]},
        points=points,
    )

    samples = dict(diagnostics.seminorm_samples)
    assert samples["constant"] == 0.0
    assert samples["first"] > 0.0


def test_diagnostics_need_points_for_callables(unit_square_graph):
    with pytest.raises(InputError):
        graph_diagnostics(unit_square_graph, functions={"f": lambda x: x[:, 0]})


def test_export_edge_list(tmp_path):
    g = NeighborhoodGraph.from_weights(np.array([[0.0, 2.0, 0.0], [2.0, 0.0, 1.5], [0.0, 1.5, 0.0]]))

    path = export_edge_list(g, tmp_path / "edges.csv")

    assert path.read_text().splitlines() == ["i,j,weight", "0,1,2.0", "1,2,1.5"]
