import numpy as np
import pytest

from slimg.classifier import FitConfig, fit, predict
from slimg.features import (
    SLIMG_BLOCK_NAMES,
    PropagatedFeatures,
    build_slimg_features,
    concat_blocks,
    load_features,
    make_features,
    save_features,
)
from slimg.graph import SparseGraph
from slimg.linalg import l2_normalize_rows, pca_reduce
from slimg.synth import Features, ScenarioSpec, Structure, gen_scenario

from conftest import dense_sym_norm, random_graph


class TestConcatBlocks:
    def test_two_blocks(self, rng):
        a, b = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
        f = make_features([("a", a), ("b", b)], 3)
        mat, bounds = concat_blocks(f)
        assert mat.shape == (3, 4)
        np.testing.assert_array_equal(bounds, [0, 2, 4])
        np.testing.assert_array_equal(mat[:, :2], a)

    def test_single_block_identity(self, rng):
        a = rng.normal(size=(4, 3))
        mat, bounds = concat_blocks(make_features([("a", a)], 4))
        np.testing.assert_array_equal(mat, a)
        np.testing.assert_array_equal(bounds, [0, 3])

    def test_four_equal_blocks(self, rng):
        blocks = [(f"b{i}", rng.normal(size=(5, 3))) for i in range(4)]
        mat, bounds = concat_blocks(make_features(blocks, 5))
        assert mat.shape == (5, 12)
        np.testing.assert_array_equal(bounds, [0, 3, 6, 9, 12])

    def test_duplicate_names_rejected(self, rng):
        a = rng.normal(size=(2, 1))
        with pytest.raises(ValueError, match="unique"):
            PropagatedFeatures(blocks=(("a", a), ("a", a)), n=2)


class TestBuildSlimgFeatures:
    def test_block_order_and_shapes(self, rng):
        g = random_graph(40, 5, seed=0)
        x = rng.uniform(size=(40, 6))
        f = build_slimg_features(g, x, seed=0)
        assert f.block_names == SLIMG_BLOCK_NAMES
        widths = {mat.shape[1] for _, mat in f.blocks}
        assert len(widths) == 1
        r = widths.pop()
        assert 1 <= r <= 6
        assert f.width == 4 * r
        assert all(mat.shape[0] == 40 for _, mat in f.blocks)

    def test_empty_graph_degenerate_blocks(self, rng):
        g = SparseGraph.from_edges(12, [], [])
        x = rng.uniform(size=(12, 4))
        f = build_slimg_features(g, x, seed=0)
        blocks = dict(f.blocks)
        # row-normalized A is all zero, so the two-step block collapses
        np.testing.assert_array_equal(blocks["gArow2X"], 0.0)
        # sym normalization with loops of an empty graph is the identity
        np.testing.assert_allclose(blocks["gAsym2X"], blocks["gX"], atol=1e-12)

    def test_one_hot_square_case(self):
        g = random_graph(4, 2, seed=1)
        x = np.eye(4)
        f = build_slimg_features(g, x, seed=1)
        for _, mat in f.blocks:
            assert mat.shape[0] == 4
            assert mat.shape[1] <= 4

    def test_row_norms_bounded(self, rng):
        g = random_graph(60, 6, seed=2)
        x = rng.uniform(size=(60, 8))
        f = build_slimg_features(g, x, seed=2)
        for _, mat in f.blocks:
            assert np.linalg.norm(mat, axis=1).max() <= 1 + 1e-9

    def test_deterministic(self, rng):
        g = random_graph(50, 5, seed=3)
        x = rng.uniform(size=(50, 5))
        f1 = build_slimg_features(g, x, seed=7)
        f2 = build_slimg_features(g, x, seed=7)
        for (_, a), (_, b) in zip(f1.blocks, f2.blocks):
            np.testing.assert_array_equal(a, b)

    def test_two_step_matches_dense_oracle(self, rng):
        g = random_graph(30, 4, seed=4)
        x = rng.uniform(size=(30, 5))
        a = dense_sym_norm(g.toarray(), with_loops=True)
        oracle = a @ (a @ x)
        from slimg.features import _two_step
        from slimg.graph import NormScheme

        np.testing.assert_allclose(
            _two_step(g, NormScheme.SYM_WITH_LOOPS, x), oracle, atol=1e-10
        )

    def test_blocks_are_normalized_pca_outputs(self, rng):
        # g(.) is PCA then row L2 normalization; verify the composition
        # and the orthogonality of the pre-normalization scores.
        g = random_graph(40, 5, seed=5)
        x = rng.uniform(size=(40, 6))
        f = build_slimg_features(g, x, seed=5)
        r = f.blocks[1][1].shape[1]
        scores = pca_reduce(x, r)
        gram = scores.T @ scores
        off = np.abs(gram - np.diag(np.diag(gram)))
        assert off.max() <= 1e-6 * np.abs(gram).max()
        np.testing.assert_allclose(dict(f.blocks)["gX"], l2_normalize_rows(scores), atol=1e-12)

    def test_zero_width_features_rejected(self):
        g = random_graph(10, 3, seed=6)
        with pytest.raises(ValueError):
            build_slimg_features(g, np.empty((10, 0)), seed=0)


class TestNeighborBlockAccuracy:
    def test_sym_two_step_block_classifies_homophily(self):
        # Structural features on a homophilous graph: the smoothed
        # two-hop block alone must reach high test accuracy.
        spec = ScenarioSpec(
            structure=Structure.HOMOPHILY, features=Features.STRUCTURAL, n=1000, c=4, seed=0
        )
        ds = gen_scenario(spec)
        f = build_slimg_features(ds.graph, ds.features, seed=0)
        block = dict(f.blocks)["gAsym2X"]
        rng = np.random.default_rng(0)
        perm = rng.permutation(1000)
        train, val, test = perm[:25], perm[25:50], perm[50:]
        model = fit(block, ds.labels, train, val, FitConfig(lasso=1e-4))
        acc = float(np.mean(predict(model, block)[test] == ds.labels[test]))
        assert acc >= 0.85


class TestFeatureCache:
    def test_roundtrip_bit_identical(self, rng, tmp_path):
        g = random_graph(30, 4, seed=8)
        x = rng.uniform(size=(30, 5))
        f = build_slimg_features(g, x, seed=8)
        path = tmp_path / "cache.feat"
        save_features(f, path)
        loaded = load_features(path)
        assert loaded.n == f.n
        assert loaded.block_names == f.block_names
        for (_, a), (_, b) in zip(f.blocks, loaded.blocks):
            np.testing.assert_array_equal(a, b)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bogus.feat"
        path.write_bytes(b"NOTAFEATUREFILE")
        with pytest.raises(ValueError, match="not a feature cache"):
            load_features(path)
