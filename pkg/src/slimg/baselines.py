"""Linearized baseline propagators and graph kernels.

Each baseline is a parameter-free (given its hyperparameters) linear
transform of node features; all of them emit PropagatedFeatures that
feed the same sparse logistic classifier. Power-based kinds apply the
normalized adjacency iteratively and never materialize matrix powers.
The kernel kinds and PPNP require a dense solve or eigendecomposition
and are refused beyond ``dense_limit`` nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .features import PropagatedFeatures, make_features
from .graph import NormScheme, SparseGraph, check_dense, normalize, normalized_laplacian, spmm

DENSE_LIMIT = 20_000

_DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "lr": {},
    "sgc": {"K": 2},
    "dgc": {"K": 200, "T": 3.0},
    "s2gc": {"K": 16, "alpha": 0.05},
    "g2cn": {"K": 100, "N": 2, "T1": 10.0, "T2": 10.0, "b1": 0.0, "b2": 2.0},
    "ppnp": {"alpha": 0.1},
    "appnp": {"K": 10, "alpha": 0.1},
    "gprgnn": {"K": 10},
    "chebnet": {"K": 2},
    "sage": {"K": 2},
    "h2gcn": {"K": 2},
    "reg_kernel": {"sigma": 1.0},
    "diff_kernel": {"sigma": 1.0},
    "rw_kernel": {"a": 1.0, "p": 2},
}

BASELINE_KINDS = tuple(_DEFAULT_PARAMS)

# Kinds whose propagator needs an n x n dense matrix.
_DENSE_KINDS = frozenset({"ppnp", "reg_kernel", "diff_kernel"})


class CapacityError(RuntimeError):
    """Raised when a dense-only kind is asked for a graph beyond the limit."""


@dataclass(frozen=True)
class BaselineSpec:
    """A baseline kind plus its propagation hyperparameters."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _DEFAULT_PARAMS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        merged = dict(_DEFAULT_PARAMS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        k = merged.get("K")
        if k is not None and int(k) < 1:
            raise ValueError("K must be >= 1")

    def param(self, name: str) -> float:
        return self.params[name]


def _int(spec: BaselineSpec, name: str) -> int:
    return int(spec.param(name))


def _require_dense_capacity(spec, g, dense_limit):
    if g.n > dense_limit:
        raise CapacityError(
            f"{spec.kind} needs a dense {g.n} x {g.n} solve; limit is {dense_limit} nodes"
        )


def _sym_loops(g):
    return normalize(g, NormScheme.SYM_WITH_LOOPS)


def _power_blocks(a, x, ks):
    # Blocks a^k x for k in ks (ks must be the contiguous range 0..max).
    blocks = []
    h = x
    for k in range(max(ks) + 1):
        if k > 0:
            h = spmm(a, h)
        if k in ks:
            blocks.append((f"k{k}", h))
    return blocks


def propagate(spec: BaselineSpec, g: SparseGraph, x: np.ndarray, dense_limit: int = DENSE_LIMIT) -> PropagatedFeatures:
    """Apply the baseline's propagator function to ``x``.

    Raises CapacityError for kernel/PPNP kinds on graphs larger than
    ``dense_limit`` nodes, mirroring where dense methods run out of
    memory in practice.
    """
    x = check_dense(x, rows=g.n, name="features")
    kind = spec.kind

    if kind == "lr":
        blocks = [("X", x)]

    elif kind == "sgc":
        a = _sym_loops(g)
        h = x
        for _ in range(_int(spec, "K")):
            h = spmm(a, h)
        blocks = [("sgc", h)]

    elif kind == "dgc":
        a = _sym_loops(g)
        k, t = _int(spec, "K"), spec.param("T")
        tk = t / k
        h = x
        for _ in range(k):
            h = (1.0 - tk) * h + tk * spmm(a, h)
        blocks = [("dgc", h)]

    elif kind == "s2gc":
        a = _sym_loops(g)
        k, alpha = _int(spec, "K"), spec.param("alpha")
        p = x
        acc = np.zeros_like(x)
        for _ in range(k):
            p = spmm(a, p)
            acc += alpha * x + (1.0 - alpha) * p
        blocks = [("s2gc", acc)]

    elif kind == "g2cn":
        a = normalize(g, NormScheme.SYM_NO_LOOPS)
        k, n_bands = _int(spec, "K"), _int(spec, "N")
        blocks = []
        for i in range(1, n_bands + 1):
            t_i = spec.param(f"T{i}") / k
            shift = spec.param(f"b{i}") - 1.0
            h = x
            for _ in range(k):
                bh = shift * h + spmm(a, h)
                bbh = shift * bh + spmm(a, bh)
                h = h - t_i * bbh
            blocks.append((f"g2cn_{i}", h))

    elif kind == "ppnp":
        _require_dense_capacity(spec, g, dense_limit)
        a = _sym_loops(g).toarray()
        alpha = spec.param("alpha")
        m = np.eye(g.n) - (1.0 - alpha) * a
        blocks = [("ppnp", np.linalg.solve(m, x))]

    elif kind == "appnp":
        a = _sym_loops(g)
        k, alpha = _int(spec, "K"), spec.param("alpha")
        acc = alpha * x
        p = x
        for step in range(1, k):
            p = spmm(a, p)
            acc += alpha * (1.0 - alpha) ** step * p
        p = spmm(a, p)
        acc += (1.0 - alpha) ** k * p
        blocks = [("appnp", acc)]

    elif kind == "gprgnn":
        a = _sym_loops(g)
        k = _int(spec, "K")
        blocks = _power_blocks(a, x, range(k + 1))

    elif kind == "chebnet":
        a = normalize(g, NormScheme.SYM_NO_LOOPS)
        k = _int(spec, "K")
        blocks = _power_blocks(a, x, range(k))

    elif kind == "sage":
        a = normalize(g, NormScheme.ROW_NO_LOOPS)
        k = _int(spec, "K")
        blocks = _power_blocks(a, x, range(k + 1))

    elif kind == "h2gcn":
        a = normalize(g, NormScheme.SYM_NO_LOOPS)
        k = _int(spec, "K")
        blocks = _power_blocks(a, x, range(2 * k + 1))

    elif kind == "reg_kernel":
        _require_dense_capacity(spec, g, dense_limit)
        lap = normalized_laplacian(g).toarray()
        sigma = spec.param("sigma")
        m = np.eye(g.n) + sigma**2 * lap
        blocks = [("reg_kernel", np.linalg.solve(m, x))]

    elif kind == "diff_kernel":
        _require_dense_capacity(spec, g, dense_limit)
        lap = normalized_laplacian(g).toarray()
        sigma = spec.param("sigma")
        vals, vecs = np.linalg.eigh(lap)
        weights = np.exp(-(sigma**2) / 2.0 * vals)
        blocks = [("diff_kernel", vecs @ (weights[:, None] * (vecs.T @ x)))]

    elif kind == "rw_kernel":
        lap = normalized_laplacian(g)
        a_coef, p_steps = spec.param("a"), _int(spec, "p")
        h = x
        for _ in range(p_steps):
            h = a_coef * h - spmm(lap, h)
        blocks = [("rw_kernel", h)]

    else:  # pragma: no cover - guarded by BaselineSpec
        raise ValueError(f"unknown baseline kind {kind!r}")

    return make_features(blocks, g.n)
