"""Real-dataset ingestion.

Two formats are supported:

* a plain directory with ``edges.txt`` (whitespace ``src dst`` pairs),
  ``features.csv`` (one row of reals per node), and ``labels.txt`` (one
  integer per line, -1 for unlabeled) -- the same files the ``gen``
  subcommand writes;
* the classic Planetoid citation-network distribution
  (``ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}``), the format
  used by the standard Cora/CiteSeer/PubMed splits.

Ingestion can row-normalize features (the usual preprocessing for these
benchmarks, applied uniformly to every method) and optionally drop
classes with too few instances.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .graph import SparseGraph, load_edge_list, load_features_csv, load_labels
from .linalg import l2_normalize_rows

PLANETOID_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")


@dataclass(frozen=True)
class Dataset:
    name: str
    graph: SparseGraph
    features: np.ndarray
    labels: np.ndarray


def _read_pickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def load_planetoid(root, name: str) -> Dataset:
    """Load a Planetoid-format dataset from ``root`` (raw, unnormalized).

    Reconstructs the full node ordering: rows of ``allx``/``ally`` hold
    the first nodes, test rows are re-scattered to the positions listed
    in ``test.index``. Gaps in the test index range (isolated nodes in
    some distributions) get zero features and label 0.
    """
    root = Path(root)
    paths = {part: root / f"ind.{name}.{part}" for part in PLANETOID_PARTS}
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        raise FileNotFoundError(f"missing Planetoid files: {', '.join(missing)}")

    x = _read_pickle(paths["x"])  # noqa: F841 - kept for format validation
    allx = _read_pickle(paths["allx"])
    tx = _read_pickle(paths["tx"])
    ally = np.asarray(_read_pickle(paths["ally"]))
    ty = np.asarray(_read_pickle(paths["ty"]))
    graph_dict = _read_pickle(paths["graph"])
    test_idx = np.loadtxt(paths["test.index"], dtype=np.int64)

    lo, hi = int(test_idx.min()), int(test_idx.max())
    span = hi - lo + 1
    # Features/labels for the contiguous test range; rows absent from
    # test.index stay zero (isolated nodes, e.g. in CiteSeer).
    tx = sparse.csr_array(tx)
    tx_full = np.zeros((span, tx.shape[1]), dtype=np.float64)
    tx_full[test_idx - lo] = tx.toarray()
    ty_full = np.zeros((span, ty.shape[1]), dtype=np.float64)
    ty_full[test_idx - lo] = ty

    features = np.vstack([sparse.csr_array(allx).toarray(), tx_full])
    onehot = np.vstack([ally, ty_full])
    labels = np.argmax(onehot, axis=1).astype(np.int64)

    n = features.shape[0]
    src, dst = [], []
    for node, neighbors in graph_dict.items():
        for nb in neighbors:
            if node < n and nb < n:
                src.append(node)
                dst.append(nb)
    graph = SparseGraph.from_edges(n, src, dst, undirected=True)
    return Dataset(name=name, graph=graph, features=features, labels=labels)


def load_dataset_dir(path) -> Dataset:
    """Load the plain edges/features/labels directory format (raw)."""
    path = Path(path)
    labels = load_labels(path / "labels.txt")
    graph = load_edge_list(path / "edges.txt", n_hint=labels.shape[0])
    features = load_features_csv(path / "features.csv")
    if features.shape[0] != graph.n or labels.shape[0] != graph.n:
        raise ValueError(
            f"{path}: inconsistent node counts "
            f"(graph {graph.n}, features {features.shape[0]}, labels {labels.shape[0]})"
        )
    return Dataset(name=path.name, graph=graph, features=features, labels=labels)


def prepare(ds: Dataset, row_normalize: bool = True, min_class_count: int = 0) -> Dataset:
    """Apply ingestion-time preprocessing uniformly for all methods.

    ``row_normalize`` rescales each feature row to unit L2 norm.
    ``min_class_count`` > 0 unlabels every class with fewer instances
    (used for benchmarks where tiny classes cannot be split).
    """
    features = l2_normalize_rows(ds.features) if row_normalize else ds.features
    labels = ds.labels
    if min_class_count > 0:
        labels = labels.copy()
        classes, counts = np.unique(labels[labels >= 0], return_counts=True)
        for cls, cnt in zip(classes, counts):
            if cnt < min_class_count:
                labels[labels == cls] = -1
        kept = np.unique(labels[labels >= 0])
        remap = {int(old): new for new, old in enumerate(kept)}
        labels = np.asarray(
            [remap[int(v)] if v >= 0 else -1 for v in labels], dtype=np.int64
        )
    return Dataset(name=ds.name, graph=ds.graph, features=features, labels=labels)
