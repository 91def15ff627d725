"""Sparse graph container, adjacency normalizations, and file loaders.

Every propagator in the package works on the CSR adjacency stored here.
All containers are immutable after construction; normalizations return
new objects so propagated features can be cached safely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import sparse


class NormScheme(enum.Enum):
    """Adjacency normalization variants.

    ``SYM_*`` scales by inverse square-root degrees on both sides,
    ``ROW_*`` by inverse degrees on the left. ``*_WITH_LOOPS`` adds the
    identity before computing degrees.
    """

    SYM_NO_LOOPS = "sym"
    SYM_WITH_LOOPS = "sym_loops"
    ROW_NO_LOOPS = "row"
    ROW_WITH_LOOPS = "row_loops"

    @property
    def with_loops(self) -> bool:
        return self in (NormScheme.SYM_WITH_LOOPS, NormScheme.ROW_WITH_LOOPS)

    @property
    def symmetric(self) -> bool:
        return self in (NormScheme.SYM_NO_LOOPS, NormScheme.SYM_WITH_LOOPS)


@dataclass(frozen=True)
class SparseGraph:
    """Immutable CSR matrix with graph semantics.

    ``matrix`` holds float64 values (edge weights, default 1.0) in
    canonical CSR form: sorted column indices, no duplicates. When
    ``undirected`` is set the stored values must be symmetric.
    """

    n: int
    matrix: sparse.csr_array
    undirected: bool = True

    @property
    def nnz(self) -> int:
        """Number of stored (directed) entries."""
        return int(self.matrix.nnz)

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (stored entries / 2 when undirected)."""
        return self.nnz // 2 if self.undirected else self.nnz

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    @classmethod
    def from_csr(cls, matrix, undirected: bool = True) -> "SparseGraph":
        m = sparse.csr_array(matrix, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        g = cls(n=m.shape[0], matrix=m, undirected=undirected)
        g.validate()
        return g

    @classmethod
    def from_edges(cls, n, src, dst, values=None, undirected: bool = True) -> "SparseGraph":
        """Build from parallel index arrays; symmetrizes when undirected.

        Duplicate entries and self-loops are dropped. ``values`` defaults
        to 1.0 per edge.
        """
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if values is None:
            values = np.ones(src.shape[0], dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        keep = src != dst
        src, dst, values = src[keep], dst[keep], values[keep]
        if undirected:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
            values = np.concatenate([values, values])
        # dedup keeping one value per (i, j)
        codes = src * np.int64(n) + dst
        order = np.argsort(codes, kind="stable")
        codes, src, dst, values = codes[order], src[order], dst[order], values[order]
        first = np.ones(codes.shape[0], dtype=bool)
        first[1:] = codes[1:] != codes[:-1]
        m = sparse.csr_array(
            (values[first], (src[first], dst[first])), shape=(n, n), dtype=np.float64
        )
        m.sort_indices()
        g = cls(n=n, matrix=m, undirected=undirected)
        g.validate()
        return g

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        m = self.matrix
        if m.shape != (self.n, self.n):
            raise ValueError(f"matrix shape {m.shape} does not match n={self.n}")
        if m.nnz:
            if m.indices.min() < 0 or m.indices.max() >= self.n:
                raise ValueError("column index out of range")
            diffs = np.diff(m.indices)
            row_start = np.zeros(m.nnz, dtype=bool)
            bounds = m.indptr[1:-1]
            row_start[bounds[bounds < m.nnz]] = True
            if np.any((diffs <= 0) & ~row_start[1:]):
                raise ValueError("column indices not strictly increasing within a row")
            if not np.all(np.isfinite(m.data)):
                raise ValueError("non-finite edge weight")
        if self.undirected and (m != m.T).nnz != 0:
            raise ValueError("undirected graph must have symmetric values")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def as_graph(g, undirected: bool = True) -> SparseGraph:
    """Accept a SparseGraph or anything scipy can coerce to CSR."""
    if isinstance(g, SparseGraph):
        return g
    return SparseGraph.from_csr(g, undirected=undirected)


def check_dense(x, rows: int | None = None, name: str = "x") -> np.ndarray:
    """Validate a dense 2-D float matrix; returns a float64 C-order array."""
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if x.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {x.shape}")
    if rows is not None and x.shape[0] != rows:
        raise ValueError(f"{name} has {x.shape[0]} rows, expected {rows}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def normalize(g: SparseGraph, scheme: NormScheme) -> SparseGraph:
    """Return the degree-normalized adjacency under ``scheme``.

    Degree-zero nodes get all-zero rows/columns (a divide-by-zero is
    treated as zero) except that the ``*_WITH_LOOPS`` variants keep the
    unit self-loop, whose degree is at least one.
    """
    a = g.matrix
    if scheme.with_loops:
        a = (a + sparse.eye_array(g.n, format="csr")).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()
    if scheme.symmetric:
        with np.errstate(divide="ignore"):
            inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
        out = sparse.csr_array(sparse.diags_array(inv) @ a @ sparse.diags_array(inv))
    else:
        inv = np.where(deg > 0, 1.0 / np.where(deg > 0, deg, 1.0), 0.0)
        out = sparse.csr_array(sparse.diags_array(inv) @ a)
    out.sort_indices()
    return SparseGraph(n=g.n, matrix=out, undirected=scheme.symmetric and g.undirected)


def spmm(s: SparseGraph, x: np.ndarray) -> np.ndarray:
    """Exact sparse-dense product ``s @ x``."""
    x = check_dense(x, rows=None)
    if x.shape[0] != s.n:
        raise ValueError(f"dimension mismatch: graph has {s.n} nodes, x has {x.shape[0]} rows")
    return np.ascontiguousarray(s.matrix @ x)


def normalized_laplacian(g: SparseGraph) -> SparseGraph:
    """I - D^{-1/2} A D^{-1/2}; degree-zero rows keep only the diagonal 1."""
    a_sym = normalize(g, NormScheme.SYM_NO_LOOPS).matrix
    lap = sparse.csr_array(sparse.eye_array(g.n, format="csr") - a_sym)
    lap.eliminate_zeros()
    lap.sort_indices()
    return SparseGraph(n=g.n, matrix=lap, undirected=g.undirected)


def load_edge_list(path, n_hint: int | None = None) -> SparseGraph:
    """Load a whitespace-separated ``src dst`` edge list (0-indexed).

    The result is symmetrized, deduplicated, and self-loop-free. Node
    count is ``max index + 1``, or ``n_hint`` if larger; indices at or
    beyond a given ``n_hint`` are rejected.
    """
    src, dst = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'src dst', got {line.strip()!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer node id in {line.strip()!r}") from None
            if i < 0 or j < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
            if n_hint is not None and (i >= n_hint or j >= n_hint):
                raise ValueError(f"{path}:{lineno}: node id >= n_hint ({n_hint})")
            src.append(i)
            dst.append(j)
    n = max(max(src, default=-1), max(dst, default=-1)) + 1
    if n_hint is not None:
        n = max(n, n_hint)
    return SparseGraph.from_edges(n, src, dst, undirected=True)


def load_features_csv(path) -> np.ndarray:
    """Load node features: one CSV row of reals per node."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(v) for v in line.split(",")]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric feature value") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    return np.asarray(rows, dtype=np.float64)


def load_labels(path) -> np.ndarray:
    """Load labels: one integer per line, -1 marks an unlabeled node."""
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                v = int(line)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer label") from None
            if v < -1:
                raise ValueError(f"{path}:{lineno}: label must be >= -1")
            labels.append(v)
    return np.asarray(labels, dtype=np.int64)
