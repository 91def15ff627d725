import numpy as np
import pytest
from scipy import sparse

from slimg.graph import SparseGraph
from slimg.linalg import (
    l2_normalize_rows,
    pca_reduce,
    select_rank_by_energy,
    standardize_columns,
    truncated_svd,
)
from slimg.synth import Features, ScenarioSpec, Structure, gen_structure

from conftest import planted_rank_matrix


class TestTruncatedSvd:
    def test_identity_singular_values(self):
        res = truncated_svd(sparse.eye_array(4, format="csr"), 2, seed=0)
        np.testing.assert_allclose(res.sigma, [1.0, 1.0], atol=1e-6)

    def test_rank_one(self):
        rng = np.random.default_rng(1)
        u = rng.normal(size=6)
        u /= np.linalg.norm(u)
        v = rng.normal(size=6)
        v /= np.linalg.norm(v)
        res = truncated_svd(np.outer(u, v), 3, seed=1)
        assert abs(res.sigma[0] - 1.0) <= 1e-6
        assert np.all(res.sigma[1:] <= 1e-6)

    def test_matches_dense_oracle_on_planted_rank(self):
        m = planted_rank_matrix(60, rank=10, seed=2)
        res = truncated_svd(m, 10, seed=2)
        exact = np.linalg.svd(m.toarray(), compute_uv=False)[:10]
        np.testing.assert_allclose(res.sigma, exact, rtol=1e-4)

    def test_orthonormal_columns(self):
        m = planted_rank_matrix(80, rank=12, seed=3)
        res = truncated_svd(m, 8, seed=3)
        np.testing.assert_allclose(res.u.T @ res.u, np.eye(8), atol=1e-6)
        np.testing.assert_allclose(res.v.T @ res.v, np.eye(8), atol=1e-6)

    def test_triples_satisfy_av_equals_sigma_u(self):
        # Meaningful only when the subspace captures the spectrum: use a
        # planted-rank matrix and a full-rank request on a small graph.
        m = planted_rank_matrix(100, rank=8, seed=4)
        res = truncated_svd(m, 8, seed=4)
        for i in range(8):
            resid = np.linalg.norm(m @ res.v[:, i] - res.sigma[i] * res.u[:, i])
            assert resid <= 1e-4 * res.sigma[0]
        g = SparseGraph.from_edges(40, np.arange(39), np.arange(1, 40))
        res = truncated_svd(g, 40, seed=4)
        for i in range(40):
            resid = np.linalg.norm(g.matrix @ res.v[:, i] - res.sigma[i] * res.u[:, i])
            assert resid <= 1e-4 * max(res.sigma[0], 1.0)

    def test_deterministic(self):
        m = planted_rank_matrix(50, rank=6, seed=5)
        a = truncated_svd(m, 5, seed=9)
        b = truncated_svd(m, 5, seed=9)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.sigma, b.sigma)
        np.testing.assert_array_equal(a.v, b.v)

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError, match="rank"):
            truncated_svd(np.eye(3), 4, seed=0)


class TestSelectRankByEnergy:
    def test_identity_needs_ninety_percent(self):
        assert select_rank_by_energy(sparse.eye_array(10, format="csr"), 0.9, cap=100, seed=0) == 9

    def test_rank_one_matrix(self):
        u = np.ones((8, 1)) / np.sqrt(8)
        assert select_rank_by_energy(u @ u.T, 0.9, cap=100, seed=0) == 1

    def test_zero_matrix(self):
        assert select_rank_by_energy(np.zeros((5, 5)), 0.9, cap=10, seed=0) == 1

    def test_block_homophily_matches_dense_oracle(self):
        spec = ScenarioSpec(
            structure=Structure.HOMOPHILY, features=Features.RANDOM, n=400, c=4, seed=3
        )
        g, _ = gen_structure(spec)
        r = select_rank_by_energy(g, 0.9, cap=50, seed=3)
        sig = np.linalg.svd(g.toarray(), compute_uv=False)
        cum = np.cumsum(sig**2) / (sig**2).sum()
        hits = np.flatnonzero(cum >= 0.9)
        oracle = min(int(hits[0]) + 1 if hits.size else g.n, 50)
        assert r == oracle

    def test_monotone_in_threshold(self):
        m = planted_rank_matrix(60, rank=20, seed=6)
        ranks = [select_rank_by_energy(m, t, cap=60, seed=6) for t in (0.3, 0.5, 0.7, 0.9, 0.99)]
        assert ranks == sorted(ranks)

    def test_cap_clamps(self):
        assert select_rank_by_energy(sparse.eye_array(10, format="csr"), 0.9, cap=4, seed=0) == 4


class TestPcaReduce:
    def test_constant_rows_collapse_to_zero(self):
        x = np.tile([1.0, 2.0, 3.0], (6, 1))
        np.testing.assert_allclose(pca_reduce(x, 2), 0.0, atol=1e-12)

    def test_collinear_points(self):
        t = np.array([-2.0, -1.0, 0.5, 3.0, 4.0])
        x = np.column_stack([t, 2 * t])
        out = pca_reduce(x, 2)
        dist = t * np.sqrt(5.0)  # signed distance along the line y = 2x
        np.testing.assert_allclose(out[:, 0], dist - dist.mean(), atol=1e-10)
        np.testing.assert_allclose(out[:, 1], 0.0, atol=1e-10)

    def test_columns_orthogonal(self, rng):
        x = rng.normal(size=(100, 20))
        out = pca_reduce(x, 5)
        gram = out.T @ out
        norms = np.sqrt(np.diag(gram))
        off = gram - np.diag(np.diag(gram))
        assert np.all(np.abs(off) <= 1e-8 * np.outer(norms, norms).max())

    def test_permutation_invariance(self, rng):
        x = rng.normal(size=(40, 8))
        perm = rng.permutation(40)
        base = pca_reduce(x, 4)
        permuted = pca_reduce(x[perm], 4)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(40)
        np.testing.assert_allclose(permuted[inverse], base, atol=1e-8)

    def test_rank_too_large(self, rng):
        with pytest.raises(ValueError, match="rank"):
            pca_reduce(rng.normal(size=(5, 3)), 4)


class TestRowColumnNormalizers:
    def test_l2_rows_example(self):
        np.testing.assert_allclose(l2_normalize_rows(np.array([[3.0, 4.0]])), [[0.6, 0.8]])

    def test_l2_zero_row(self):
        np.testing.assert_array_equal(l2_normalize_rows(np.zeros((1, 2))), [[0.0, 0.0]])

    def test_l2_unit_norms(self, rng):
        x = rng.normal(size=(30, 7))
        norms = np.linalg.norm(l2_normalize_rows(x), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_standardize_column(self):
        out = standardize_columns(np.array([[1.0], [2.0], [3.0]]))
        assert abs(out.mean()) <= 1e-12
        assert abs(out.std() - 1.0) <= 1e-12

    def test_standardize_constant_column(self):
        np.testing.assert_array_equal(
            standardize_columns(np.full((3, 1), 5.0)), np.zeros((3, 1))
        )

    def test_standardize_zero_means(self, rng):
        x = rng.normal(loc=3.0, size=(50, 6))
        assert np.all(np.abs(standardize_columns(x).mean(axis=0)) <= 1e-10)
