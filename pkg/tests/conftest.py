import numpy as np
import pytest
from scipy import sparse

from slimg.graph import SparseGraph


def random_graph(n, avg_degree, seed, weights=False):
    """Random undirected graph with ~n*avg_degree/2 edges, no self-loops."""
    rng = np.random.default_rng(seed)
    m = int(n * avg_degree / 2)
    src = rng.integers(0, n, size=3 * m)
    dst = rng.integers(0, n, size=3 * m)
    keep = src != dst
    lo = np.minimum(src[keep], dst[keep])
    hi = np.maximum(src[keep], dst[keep])
    codes = np.unique(lo * np.int64(n) + hi)[:m]
    src, dst = codes // n, codes % n
    vals = rng.uniform(0.5, 1.5, size=src.size) if weights else None
    return SparseGraph.from_edges(n, src, dst, values=vals, undirected=True)


def dense_sym_norm(a, with_loops):
    """Dense oracle for D^{-1/2} A D^{-1/2} with optional self-loops."""
    a = np.asarray(a, dtype=float)
    if with_loops:
        a = a + np.eye(a.shape[0])
    deg = a.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return inv[:, None] * a * inv[None, :]


def dense_row_norm(a, with_loops):
    a = np.asarray(a, dtype=float)
    if with_loops:
        a = a + np.eye(a.shape[0])
    deg = a.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.where(deg > 0, deg, 1.0), 0.0)
    return inv[:, None] * a


def dense_laplacian(a):
    return np.eye(a.shape[0]) - dense_sym_norm(a, with_loops=False)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def planted_rank_matrix(n, rank, seed):
    """Sparse-backed random matrix with exactly ``rank`` positive singular
    values, spread over an order of magnitude."""
    rng = np.random.default_rng(seed)
    b = sparse.random(n, rank, density=0.3, random_state=np.random.RandomState(seed), format="csr")
    c = sparse.random(rank, n, density=0.3, random_state=np.random.RandomState(seed + 1), format="csr")
    scale = sparse.diags_array(np.linspace(10.0, 1.0, rank))
    m = sparse.csr_array(b @ scale @ c)
    assert np.linalg.matrix_rank(m.toarray()) == rank
    return m
