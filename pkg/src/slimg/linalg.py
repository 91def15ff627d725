"""Truncated SVD, energy-based rank selection, PCA, and normalizers.

The truncated SVD is a randomized subspace iteration (Gaussian test
matrix, oversampling 10, two power iterations) so that results are
reproducible from an integer seed. Dense full SVDs appear only in the
PCA path for narrow matrices and in test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import SparseGraph, check_dense

_OVERSAMPLE = 10
_POWER_ITERS = 2
# PCA has no seed parameter; the wide-matrix fallback uses a fixed one.
_PCA_SEED = 0x51A9
_PCA_EXACT_MAX_COLS = 4096


@dataclass(frozen=True)
class SvdResult:
    """Rank-r factorization A ~= u @ diag(sigma) @ v.T.

    ``sigma`` is non-negative and non-increasing; columns of ``u`` and
    ``v`` are orthonormal up to the accuracy of the subspace iteration.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def _as_operator(s):
    if isinstance(s, SparseGraph):
        return s.matrix
    if sparse.issparse(s):
        return sparse.csr_array(s, dtype=np.float64)
    return np.asarray(s, dtype=np.float64)


def _fix_signs(u, v):
    # Largest-magnitude entry of each left vector made positive, so the
    # factorization is reproducible across runs.
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return u, v


def truncated_svd(s, r: int, seed: int) -> SvdResult:
    """Rank-r SVD by randomized subspace iteration; deterministic per seed."""
    a = _as_operator(s)
    n, m = a.shape
    if r < 1 or r > min(n, m):
        raise ValueError(f"rank {r} out of range for shape {a.shape}")
    rng = np.random.default_rng(seed)
    k = min(r + _OVERSAMPLE, min(n, m))
    omega = rng.standard_normal((m, k))
    y = a @ omega
    q, _ = np.linalg.qr(y)
    for _ in range(_POWER_ITERS):
        z, _ = np.linalg.qr(a.T @ q)
        q, _ = np.linalg.qr(a @ z)
    b = (a.T @ q).T
    ub, sig, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub[:, :r]
    v = vt[:r].T.copy()
    u, v = _fix_signs(u, v)
    return SvdResult(u=u, sigma=sig[:r].copy(), v=v)


def select_rank_by_energy(s, threshold: float, cap: int, seed: int) -> int:
    """Smallest rank whose squared singular values reach ``threshold`` of
    the squared Frobenius norm, searched by doubling candidate ranks.

    Starts at 16, doubles until the threshold is met or the candidate
    hits ``min(n, cap)``; the result never exceeds the cap. An all-zero
    matrix yields rank 1.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    a = _as_operator(s)
    if sparse.issparse(a):
        fro2 = float((a.data**2).sum())
    else:
        fro2 = float((a**2).sum())
    hard_cap = max(1, min(min(a.shape), cap))
    if fro2 == 0.0:
        return 1
    k = min(16, hard_cap)
    while True:
        res = truncated_svd(a, k, seed)
        energy = np.cumsum(res.sigma**2) / fro2
        hit = np.flatnonzero(energy >= threshold)
        if hit.size:
            return int(hit[0]) + 1
        if k >= hard_cap:
            return hard_cap
        k = min(2 * k, hard_cap)


def pca_reduce(x: np.ndarray, r: int) -> np.ndarray:
    """Center columns and project onto the top-r principal directions.

    The sign of each direction is fixed (largest-magnitude entry made
    positive) so scores are reproducible. Output columns are mutually
    orthogonal; a constant input collapses to zeros.
    """
    x = check_dense(x)
    n, d = x.shape
    if r < 1 or r > min(n, d):
        raise ValueError(f"rank {r} out of range for shape {x.shape}")
    xc = x - x.mean(axis=0)
    if d <= _PCA_EXACT_MAX_COLS:
        _, _, vt = np.linalg.svd(xc, full_matrices=False)
        dirs = vt[:r]
    else:
        dirs = truncated_svd(xc, r, _PCA_SEED).v.T
    dirs = dirs.copy()
    for i in range(dirs.shape[0]):
        j = int(np.argmax(np.abs(dirs[i])))
        if dirs[i, j] < 0:
            dirs[i] = -dirs[i]
    return xc @ dirs.T


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; zero rows stay zero."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    return x / np.where(norms > 0, norms, 1.0)[:, None]


def standardize_columns(x: np.ndarray) -> np.ndarray:
    """Z-score each column (population variance); constant columns map to zero."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    return (x - mu) / np.where(sd > 0, sd, 1.0)
