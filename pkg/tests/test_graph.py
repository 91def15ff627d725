import numpy as np
import pytest

from slimg.graph import (
    NormScheme,
    SparseGraph,
    load_edge_list,
    load_features_csv,
    load_labels,
    normalize,
    normalized_laplacian,
    spmm,
)

from conftest import dense_row_norm, dense_sym_norm, random_graph


class TestLoadEdgeList:
    def test_path_graph_is_symmetrized(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("0 1\n1 2\n")
        g = load_edge_list(p)
        assert g.n == 3
        assert g.nnz == 4
        assert g.num_edges == 2
        expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        np.testing.assert_array_equal(g.toarray(), expected)

    def test_duplicates_collapse(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("0 1\n1 0\n0 1\n")
        g = load_edge_list(p)
        assert g.nnz == 2

    def test_empty_file_with_hint(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("")
        g = load_edge_list(p, n_hint=5)
        assert g.n == 5
        assert g.nnz == 0

    def test_self_loops_dropped(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("0 0\n0 1\n")
        g = load_edge_list(p)
        assert g.nnz == 2

    def test_malformed_line_reports_lineno(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("0 1\nbogus\n")
        with pytest.raises(ValueError, match=":2:"):
            load_edge_list(p)

    def test_index_beyond_hint_rejected(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("0 7\n")
        with pytest.raises(ValueError, match="n_hint"):
            load_edge_list(p, n_hint=5)


class TestNormalize:
    def test_single_edge_sym_with_loops(self):
        g = SparseGraph.from_edges(2, [0], [1])
        out = normalize(g, NormScheme.SYM_WITH_LOOPS)
        np.testing.assert_allclose(out.toarray(), [[0.5, 0.5], [0.5, 0.5]])

    def test_single_edge_row_no_loops(self):
        g = SparseGraph.from_edges(2, [0], [1])
        out = normalize(g, NormScheme.ROW_NO_LOOPS)
        np.testing.assert_allclose(out.toarray(), [[0, 1], [1, 0]])

    def test_isolated_node_keeps_self_loop(self):
        g = SparseGraph.from_edges(1, [], [])
        out = normalize(g, NormScheme.SYM_WITH_LOOPS)
        np.testing.assert_allclose(out.toarray(), [[1.0]])

    def test_degree_zero_rows_are_zero(self):
        g = SparseGraph.from_edges(3, [0], [1])  # node 2 isolated
        for scheme in (NormScheme.SYM_NO_LOOPS, NormScheme.ROW_NO_LOOPS):
            out = normalize(g, scheme)
            assert out.toarray()[2].sum() == 0.0

    @pytest.mark.parametrize("scheme", [NormScheme.SYM_NO_LOOPS, NormScheme.SYM_WITH_LOOPS])
    def test_symmetric_output_exact(self, scheme):
        g = random_graph(60, 6, seed=1)
        out = normalize(g, scheme).matrix
        assert (out != out.T).nnz == 0

    @pytest.mark.parametrize("scheme", [NormScheme.ROW_NO_LOOPS, NormScheme.ROW_WITH_LOOPS])
    def test_row_sums_one(self, scheme):
        g = random_graph(60, 6, seed=2)
        sums = np.asarray(normalize(g, scheme).matrix.sum(axis=1)).ravel()
        deg = np.asarray(g.matrix.sum(axis=1)).ravel()
        nonzero = deg > 0 if scheme is NormScheme.ROW_NO_LOOPS else np.ones_like(deg, bool)
        np.testing.assert_allclose(sums[nonzero], 1.0, atol=1e-12)

    def test_pattern_preserved(self):
        g = random_graph(40, 5, seed=3)
        out = normalize(g, NormScheme.SYM_NO_LOOPS)
        np.testing.assert_array_equal(out.matrix.indices, g.matrix.indices)
        np.testing.assert_array_equal(out.matrix.indptr, g.matrix.indptr)
        out_loops = normalize(g, NormScheme.SYM_WITH_LOOPS)
        assert out_loops.nnz == g.nnz + g.n

    @pytest.mark.parametrize("scheme", list(NormScheme))
    def test_matches_dense_oracle(self, scheme):
        g = random_graph(50, 6, seed=4, weights=True)
        oracle = (
            dense_sym_norm(g.toarray(), scheme.with_loops)
            if scheme.symmetric
            else dense_row_norm(g.toarray(), scheme.with_loops)
        )
        np.testing.assert_allclose(normalize(g, scheme).toarray(), oracle, atol=1e-12)


class TestSpmm:
    def test_identity(self):
        g = SparseGraph.from_csr(np.eye(5))
        x = np.random.default_rng(0).normal(size=(5, 3))
        out = spmm(g, x)
        np.testing.assert_array_equal(out, x)

    def test_zero_matrix(self):
        g = SparseGraph.from_edges(4, [], [])
        x = np.ones((4, 2))
        np.testing.assert_array_equal(spmm(g, x), np.zeros((4, 2)))

    def test_matches_dense_product(self):
        g = random_graph(50, 8, seed=5, weights=True)
        x = np.random.default_rng(5).normal(size=(50, 8))
        np.testing.assert_allclose(spmm(g, x), g.toarray() @ x, atol=1e-12)

    def test_dimension_mismatch(self):
        g = SparseGraph.from_edges(3, [0], [1])
        with pytest.raises(ValueError, match="mismatch"):
            spmm(g, np.ones((4, 2)))

    def test_normalized_ones_bounded(self):
        g = random_graph(80, 7, seed=6)
        out = spmm(normalize(g, NormScheme.SYM_WITH_LOOPS), np.ones((80, 1)))
        dmax = (np.asarray(g.matrix.sum(axis=1)).ravel() + 1).max()
        assert out.min() >= 0.0
        assert out.max() <= np.sqrt(dmax) + 1e-12
        oracle = dense_sym_norm(g.toarray(), True) @ np.ones((80, 1))
        np.testing.assert_allclose(out, oracle, atol=1e-12)


class TestNormalizedLaplacian:
    def test_single_edge(self):
        g = SparseGraph.from_edges(2, [0], [1])
        np.testing.assert_allclose(
            normalized_laplacian(g).toarray(), [[1, -1], [-1, 1]]
        )

    def test_empty_graph_is_identity(self):
        g = SparseGraph.from_edges(2, [], [])
        np.testing.assert_allclose(normalized_laplacian(g).toarray(), np.eye(2))

    def test_triangle(self):
        g = SparseGraph.from_edges(3, [0, 1, 2], [1, 2, 0])
        expected = np.eye(3) - (np.ones((3, 3)) - np.eye(3)) * 0.5
        np.testing.assert_allclose(normalized_laplacian(g).toarray(), expected)


class TestGraphInvariants:
    def test_from_edges_validates(self):
        g = random_graph(30, 4, seed=7)
        g.validate()

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            SparseGraph.from_csr(np.array([[0, 1.0], [0, 0]]), undirected=True)

    def test_out_of_range_rejected(self):
        m = SparseGraph.from_edges(3, [0], [1]).matrix
        bad = SparseGraph(n=2, matrix=m, undirected=True)
        with pytest.raises(ValueError):
            bad.validate()


class TestCompanionLoaders:
    def test_features_roundtrip(self, tmp_path):
        p = tmp_path / "features.csv"
        p.write_text("1.0,2.0\n3.5,-4.0\n")
        np.testing.assert_array_equal(load_features_csv(p), [[1.0, 2.0], [3.5, -4.0]])

    def test_features_ragged_rejected(self, tmp_path):
        p = tmp_path / "features.csv"
        p.write_text("1.0,2.0\n3.5\n")
        with pytest.raises(ValueError, match=":2:"):
            load_features_csv(p)

    def test_labels_roundtrip(self, tmp_path):
        p = tmp_path / "labels.txt"
        p.write_text("0\n-1\n2\n")
        np.testing.assert_array_equal(load_labels(p), [0, -1, 2])

    def test_labels_bad_value(self, tmp_path):
        p = tmp_path / "labels.txt"
        p.write_text("0\nx\n")
        with pytest.raises(ValueError, match=":2:"):
            load_labels(p)
