"""Four-block propagated node features and their on-disk cache.

The feature map concatenates four views of a graph, all reduced to a
common width r chosen by the 90%-energy rule (capped at the raw feature
dimension):

* ``U``        structure-only left singular vectors of the adjacency,
* ``gX``       PCA of the raw features,
* ``gArow2X``  PCA of the two-step row-normalized propagation (no loops),
* ``gAsym2X``  PCA of the two-step symmetric propagation (with loops),

each followed by row-wise L2 normalization. The propagator has no
hyperparameters, so features can be cached and reused while searching
classifier penalties.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .graph import NormScheme, SparseGraph, check_dense, normalize, spmm
from .linalg import l2_normalize_rows, pca_reduce, select_rank_by_energy, truncated_svd

SLIMG_BLOCK_NAMES = ("U", "gX", "gArow2X", "gAsym2X")
ENERGY_THRESHOLD = 0.9

_FEATURE_MAGIC = b"SLIMGFEA"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PropagatedFeatures:
    """Ordered, named feature blocks sharing a row count."""

    blocks: tuple[tuple[str, np.ndarray], ...]
    n: int

    def __post_init__(self):
        names = [name for name, _ in self.blocks]
        if len(set(names)) != len(names):
            raise ValueError("block names must be unique")
        for name, mat in self.blocks:
            if mat.ndim != 2 or mat.shape[0] != self.n:
                raise ValueError(f"block {name!r} must have {self.n} rows")

    @property
    def block_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.blocks)

    @property
    def block_bounds(self) -> np.ndarray:
        """Column offsets delimiting blocks in the concatenated matrix."""
        widths = [mat.shape[1] for _, mat in self.blocks]
        return np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)

    @property
    def width(self) -> int:
        return int(sum(mat.shape[1] for _, mat in self.blocks))

    @property
    def matrix(self) -> np.ndarray:
        return concat_blocks(self)[0]


def make_features(blocks, n: int) -> PropagatedFeatures:
    """Build a PropagatedFeatures from (name, matrix) pairs."""
    return PropagatedFeatures(
        blocks=tuple((name, np.ascontiguousarray(mat, dtype=np.float64)) for name, mat in blocks),
        n=n,
    )


def concat_blocks(f: PropagatedFeatures) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal concatenation in block order plus boundary offsets."""
    mat = np.hstack([m for _, m in f.blocks]) if len(f.blocks) > 1 else f.blocks[0][1]
    return np.ascontiguousarray(mat), f.block_bounds


def _two_step(g: SparseGraph, scheme: NormScheme, x: np.ndarray) -> np.ndarray:
    # Two successive SpMMs; the squared adjacency is never materialized.
    a = normalize(g, scheme)
    return spmm(a, spmm(a, x))


def build_slimg_features(g: SparseGraph, x: np.ndarray, seed: int) -> PropagatedFeatures:
    """Build the four-block feature map for graph ``g`` and features ``x``.

    Parameters
    ----------
    g : SparseGraph
        Undirected adjacency.
    x : ndarray of shape (n, d), d >= 1
        Raw node features.
    seed : int
        Seeds the randomized SVD of the adjacency; the pipeline is
        deterministic for a fixed seed.
    """
    x = check_dense(x, rows=g.n, name="features")
    n, d = x.shape
    if d < 1:
        raise ValueError("features must have at least one column")
    r = select_rank_by_energy(g, ENERGY_THRESHOLD, cap=d, seed=seed)
    r = min(r, n, d)
    u = truncated_svd(g, r, seed).u
    blocks = [
        ("U", l2_normalize_rows(u)),
        ("gX", l2_normalize_rows(pca_reduce(x, r))),
        ("gArow2X", l2_normalize_rows(pca_reduce(_two_step(g, NormScheme.ROW_NO_LOOPS, x), r))),
        ("gAsym2X", l2_normalize_rows(pca_reduce(_two_step(g, NormScheme.SYM_WITH_LOOPS, x), r))),
    ]
    return make_features(blocks, n)


def save_features(f: PropagatedFeatures, path) -> None:
    """Serialize blocks: header (n, count, names, dims) + little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(_FEATURE_MAGIC)
        fh.write(struct.pack("<IQI", _FORMAT_VERSION, f.n, len(f.blocks)))
        for name, mat in f.blocks:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<Q", mat.shape[1]))
        for _, mat in f.blocks:
            fh.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())


def load_features(path) -> PropagatedFeatures:
    with open(path, "rb") as fh:
        magic = fh.read(len(_FEATURE_MAGIC))
        if magic != _FEATURE_MAGIC:
            raise ValueError(f"{path}: not a feature cache file")
        version, n, nblocks = struct.unpack("<IQI", fh.read(16))
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        headers = []
        for _ in range(nblocks):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (cols,) = struct.unpack("<Q", fh.read(8))
            headers.append((name, cols))
        blocks = []
        for name, cols in headers:
            buf = fh.read(8 * n * cols)
            mat = np.frombuffer(buf, dtype="<f8").reshape(n, cols)
            blocks.append((name, mat.astype(np.float64)))
    return make_features(blocks, n)
