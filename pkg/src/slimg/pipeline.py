"""End-to-end transductive node classifier (features + sparse classifier)."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import classifier
from .classifier import FitConfig
from .features import build_slimg_features
from .graph import as_graph, check_dense


class SlimGClassifier(BaseEstimator):
    """Four-block feature propagation followed by group-sparse logistic
    regression, as a single transductive estimator.

    Parameters
    ----------
    lasso, group_lasso : float
        Elementwise and blockwise penalty weights.
    max_epochs, patience : int
        Proximal-gradient budget and validation early-stopping patience.
    seed : int
        Seeds the randomized SVD of the adjacency.

    After ``fit`` the propagated features and the trained linear model
    are available as ``features_`` and ``model_``; ``predict`` returns
    labels for every node in the graph.
    """

    def __init__(self, lasso=1e-4, group_lasso=1e-4, max_epochs=100, patience=5, seed=0):
        self.lasso = lasso
        self.group_lasso = group_lasso
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed

    def fit(self, graph, features, labels, train_idx, val_idx):
        g = as_graph(graph)
        x = check_dense(features, rows=g.n, name="features")
        self.features_ = build_slimg_features(g, x, self.seed)
        cfg = FitConfig(
            lasso=self.lasso,
            group_lasso=self.group_lasso,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )
        self.model_ = classifier.fit(self.features_, labels, train_idx, val_idx, cfg)
        return self

    def predict(self, node_idx=None) -> np.ndarray:
        pred = classifier.predict(self.model_, self.features_)
        return pred if node_idx is None else pred[np.asarray(node_idx, dtype=np.int64)]

    def group_norms(self) -> list[tuple[str, float]]:
        return classifier.group_norms(self.model_)
