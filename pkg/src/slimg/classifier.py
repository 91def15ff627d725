"""Multinomial logistic regression with elementwise and group sparsity.

The objective is

    mean cross-entropy over the training rows
    + lasso * ||W||_1
    + group_lasso * sum_blocks ||W_block||_F

minimized by accelerated proximal gradient with a backtracking line
search and a monotone safeguard (the accepted iterate never increases
the objective). The composite proximal step is the soft threshold
followed by blockwise group shrinkage, which produces exact zeros for
suppressed blocks. The bias is never penalized. Training is full batch
and fully deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .features import PropagatedFeatures, concat_blocks

_MODEL_MAGIC = b"SLIMGMDL"
_MODEL_VERSION = 1

# The line search re-tries a doubled step each epoch before backtracking,
# so one conservative epoch cannot cap progress for the rest of training.
_STEP_GROWTH = 2.0
_MAX_STEP = 1e6


@dataclass(frozen=True)
class FitConfig:
    """Training settings; ``seed`` is kept for interface stability (the
    full-batch optimizer is deterministic and does not consume it)."""

    lasso: float = 0.0
    group_lasso: float = 0.0
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.lasso < 0 or self.group_lasso < 0:
            raise ValueError("penalty weights must be non-negative")
        if self.patience > self.max_epochs:
            raise ValueError("patience must not exceed max_epochs")


@dataclass
class SparseLinearModel:
    """Per-class weights partitioned by feature block, plus bias."""

    weights: np.ndarray  # (h, c)
    bias: np.ndarray  # (c,)
    block_bounds: np.ndarray  # (num_blocks + 1,), last == h
    block_names: tuple[str, ...]
    train_trace: list[tuple[float, float]] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]

    @property
    def width(self) -> int:
        return self.weights.shape[0]


def soft_threshold(w: np.ndarray, t: float) -> np.ndarray:
    """Elementwise prox of t*||.||_1: sign(w) * max(|w| - t, 0)."""
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def group_shrink(w: np.ndarray, t: float, bounds: np.ndarray) -> np.ndarray:
    """Blockwise prox of t * sum ||W_block||_F.

    Each block (all classes jointly) is scaled by max(1 - t/||block||_F, 0);
    an all-zero block stays zero.
    """
    out = w.copy()
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        nrm = np.linalg.norm(out[lo:hi])
        scale = max(1.0 - t / nrm, 0.0) if nrm > 0 else 0.0
        out[lo:hi] *= scale
    return out


def _prox(w, step, cfg, bounds):
    out = soft_threshold(w, step * cfg.lasso) if cfg.lasso > 0 else w
    if cfg.group_lasso > 0:
        out = group_shrink(out, step * cfg.group_lasso, bounds)
    return np.asarray(out)


def softmax_xent_value_grad(w, b, x, y_idx):
    """Mean cross-entropy of softmax(x @ w + b) and its gradients."""
    logits = x @ w + b
    zmax = logits.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
    m = x.shape[0]
    loss = float(np.mean(lse - logits[np.arange(m), y_idx]))
    p = np.exp(logits - lse[:, None])
    p[np.arange(m), y_idx] -= 1.0
    gw = x.T @ p / m
    gb = p.mean(axis=0)
    return loss, gw, gb


def _penalty(w, cfg, bounds):
    pen = cfg.lasso * np.abs(w).sum() if cfg.lasso > 0 else 0.0
    if cfg.group_lasso > 0:
        pen += cfg.group_lasso * sum(
            np.linalg.norm(w[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])
        )
    return float(pen)


def _as_matrix_and_bounds(features):
    if isinstance(features, PropagatedFeatures):
        mat, bounds = concat_blocks(features)
        return mat, bounds, features.block_names
    mat = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    if mat.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    bounds = np.asarray([0, mat.shape[1]], dtype=np.int64)
    return mat, bounds, ("all",)


def fit(
    features,
    labels,
    train_idx,
    val_idx,
    cfg: FitConfig,
) -> SparseLinearModel:
    """Train on ``train_idx`` with early stopping on ``val_idx`` accuracy.

    Parameters
    ----------
    features : PropagatedFeatures or ndarray (n, h)
    labels : int array (n,); -1 marks unlabeled nodes
    train_idx, val_idx : disjoint, nonempty index arrays with labels
    cfg : FitConfig

    Returns the weights of the best-validation epoch. One epoch is one
    full-batch proximal step; training stops early when validation
    accuracy has not improved for ``cfg.patience`` consecutive epochs.
    """
    mat, bounds, names = _as_matrix_and_bounds(features)
    labels = np.asarray(labels, dtype=np.int64)
    train_idx = np.asarray(train_idx, dtype=np.int64)
    val_idx = np.asarray(val_idx, dtype=np.int64)
    if train_idx.size == 0 or val_idx.size == 0:
        raise ValueError("train and validation index sets must be nonempty")
    if np.intersect1d(train_idx, val_idx).size:
        raise ValueError("train and validation index sets must be disjoint")
    if np.any(labels[train_idx] < 0) or np.any(labels[val_idx] < 0):
        raise ValueError("train/validation nodes must be labeled")
    if not np.all(np.isfinite(mat)):
        raise ValueError("features contain non-finite values")

    c = int(labels[labels >= 0].max()) + 1
    h = mat.shape[1]
    x_tr = mat[train_idx]
    y_tr = labels[train_idx]
    x_va = mat[val_idx]
    y_va = labels[val_idx]

    def objective(w, b):
        val, _, _ = softmax_xent_value_grad(w, b, x_tr, y_tr)
        return val + _penalty(w, cfg, bounds)

    w = np.zeros((h, c))
    b = np.zeros(c)
    w_prev, b_prev = w, b
    obj_prev = objective(w, b)
    yw, yb = w, b  # extrapolation point
    t_momentum = 1.0
    step = 1.0

    best_val = -1.0
    best = (w.copy(), b.copy())
    since_improve = 0
    trace: list[tuple[float, float]] = []

    for epoch in range(cfg.max_epochs):
        if epoch > 0:
            step = min(step * _STEP_GROWTH, _MAX_STEP)
        f_y, gw, gb = softmax_xent_value_grad(yw, yb, x_tr, y_tr)
        while True:
            wz = _prox(yw - step * gw, step, cfg, bounds)
            bz = yb - step * gb
            dw, db = wz - yw, bz - yb
            quad = (
                f_y
                + float((gw * dw).sum() + (gb * db).sum())
                + ((dw * dw).sum() + (db * db).sum()) / (2.0 * step)
            )
            f_z, _, _ = softmax_xent_value_grad(wz, bz, x_tr, y_tr)
            if f_z <= quad + 1e-12 or step < 1e-18:
                break
            step *= 0.5
        obj_z = f_z + _penalty(wz, cfg, bounds)
        # Monotone safeguard: keep the previous iterate if the
        # accelerated candidate raised the objective.
        if obj_z <= obj_prev:
            w, b, obj = wz, bz, obj_z
        else:
            w, b, obj = w_prev, b_prev, obj_prev
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t_momentum**2)) / 2.0
        yw = w + (t_momentum / t_next) * (wz - w) + ((t_momentum - 1.0) / t_next) * (w - w_prev)
        yb = b + (t_momentum / t_next) * (bz - b) + ((t_momentum - 1.0) / t_next) * (b - b_prev)
        w_prev, b_prev, obj_prev = w, b, obj
        t_momentum = t_next

        val_acc = float(np.mean(np.argmax(x_va @ w + b, axis=1) == y_va))
        trace.append((obj, val_acc))
        if val_acc > best_val:
            best_val = val_acc
            best = (w.copy(), b.copy())
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= cfg.patience:
                break

    return SparseLinearModel(
        weights=best[0],
        bias=best[1],
        block_bounds=np.asarray(bounds, dtype=np.int64),
        block_names=tuple(names),
        train_trace=trace,
    )


def predict(m: SparseLinearModel, features) -> np.ndarray:
    """Per-node argmax of logits; ties break toward the smallest class."""
    mat, _, _ = _as_matrix_and_bounds(features)
    if mat.shape[1] != m.width:
        raise ValueError(f"feature width {mat.shape[1]} does not match model ({m.width})")
    return np.argmax(mat @ m.weights + m.bias, axis=1)


def group_norms(m: SparseLinearModel) -> list[tuple[str, float]]:
    """Frobenius norm of each block's weights, in block order."""
    return [
        (name, float(np.linalg.norm(m.weights[lo:hi])))
        for name, lo, hi in zip(m.block_names, m.block_bounds[:-1], m.block_bounds[1:])
    ]


def save_model(m: SparseLinearModel, path) -> None:
    """Binary model file: header (h, c, bounds, names) + f64 weights/bias."""
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<IQQI", _MODEL_VERSION, m.width, m.num_classes, len(m.block_names)))
        fh.write(np.ascontiguousarray(m.block_bounds, dtype="<i8").tobytes())
        for name in m.block_names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(m.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(m.bias, dtype="<f8").tobytes())


def load_model(path) -> SparseLinearModel:
    with open(path, "rb") as fh:
        if fh.read(len(_MODEL_MAGIC)) != _MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file")
        version, h, c, nblocks = struct.unpack("<IQQI", fh.read(24))
        if version != _MODEL_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        bounds = np.frombuffer(fh.read(8 * (nblocks + 1)), dtype="<i8").astype(np.int64)
        names = []
        for _ in range(nblocks):
            (ln,) = struct.unpack("<H", fh.read(2))
            names.append(fh.read(ln).decode("utf-8"))
        weights = np.frombuffer(fh.read(8 * h * c), dtype="<f8").reshape(h, c).astype(np.float64)
        bias = np.frombuffer(fh.read(8 * c), dtype="<f8").astype(np.float64)
    return SparseLinearModel(
        weights=weights, bias=bias, block_bounds=bounds, block_names=tuple(names)
    )


class GroupLassoLogistic(BaseEstimator):
    """Estimator wrapper around :func:`fit` with sklearn conventions.

    Parameters mirror :class:`FitConfig`. After ``fit`` the trained
    :class:`SparseLinearModel` is available as ``model_``.
    """

    def __init__(self, lasso=0.0, group_lasso=0.0, max_epochs=100, patience=5, seed=0):
        self.lasso = lasso
        self.group_lasso = group_lasso
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed

    def _config(self) -> FitConfig:
        return FitConfig(
            lasso=self.lasso,
            group_lasso=self.group_lasso,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )

    def fit(self, features, labels, train_idx, val_idx):
        self.model_ = fit(features, labels, train_idx, val_idx, self._config())
        return self

    def predict(self, features):
        return predict(self.model_, features)

    def group_norms(self):
        return group_norms(self.model_)
