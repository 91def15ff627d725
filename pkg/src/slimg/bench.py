"""Experiment protocol: splits, grid search, multi-seed suites, reports.

The protocol follows the standard semi-supervised benchmark recipe:
nodes are split 2.5%/2.5%/95% into train/validation/test per seed,
every grid cell is scored by validation accuracy (ties go to the first
cell in declared order), and only the selected cell's test accuracy is
reported. Synthetic scenarios are regenerated per seed; real datasets
keep one graph and vary the split. The propagated feature matrix of the
four-block model is built once per (dataset, seed) and shared across
all penalty cells.

Report files (per-run CSV and an aggregate Markdown table) contain no
timings, so identical configurations produce byte-identical reports;
wall times are kept in memory and surfaced as diagnostics.
"""

from __future__ import annotations

import hashlib
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifier, datasets
from .baselines import BASELINE_KINDS, BaselineSpec, CapacityError, propagate
from .classifier import FitConfig, SparseLinearModel
from .features import build_slimg_features, load_features, save_features
from .synth import Features, ScenarioSpec, Structure, gen_scenario

DEFAULT_RATIOS = (0.025, 0.025, 0.95)
DEFAULT_SEEDS = (0, 1, 2, 3, 4)

_CLASSIFIER_KEYS = ("lasso", "group_lasso", "max_epochs", "patience")

# Grid axes per method; cells are the cross product in key order with the
# rightmost axis fastest. "T12" couples G2CN's two bandwidths.
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "slimg": {"lasso": [1e-3, 1e-4, 1e-5], "group_lasso": [1e-3, 1e-4, 1e-5, 1e-6]},
    "lr": {"lasso": [0.0, 5e-4]},
    "sgc": {"K": [2], "lasso": [0.0, 5e-4]},
    "dgc": {"K": [200], "T": [3.0, 4.0, 5.0, 6.0], "lasso": [0.0, 5e-4]},
    "s2gc": {"K": [16], "alpha": [0.01, 0.03, 0.05, 0.07, 0.09], "lasso": [0.0, 5e-4]},
    "g2cn": {
        "K": [100],
        "N": [2],
        "b1": [0.0],
        "b2": [2.0],
        "T12": [10.0, 20.0, 30.0, 40.0],
        "lasso": [0.0, 5e-4],
    },
    "ppnp": {"alpha": [0.1], "lasso": [0.0, 5e-4]},
    "appnp": {"K": [10], "alpha": [0.1], "lasso": [0.0, 5e-4]},
    "gprgnn": {"K": [10], "lasso": [0.0, 5e-4]},
    "chebnet": {"K": [2], "lasso": [0.0, 5e-4]},
    "sage": {"K": [2], "lasso": [0.0, 5e-4]},
    "h2gcn": {"K": [2], "lasso": [0.0, 5e-4]},
    "reg_kernel": {"sigma": [1.0], "lasso": [0.0, 5e-4]},
    "diff_kernel": {"sigma": [1.0], "lasso": [0.0, 5e-4]},
    "rw_kernel": {"a": [1.0], "p": [2], "lasso": [0.0, 5e-4]},
}

KNOWN_METHODS = tuple(DEFAULT_GRIDS)


@dataclass(frozen=True)
class Split:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


@dataclass(frozen=True)
class MethodConfig:
    name: str
    grid: tuple[dict, ...]

    @classmethod
    def with_default_grid(cls, name: str) -> "MethodConfig":
        return cls(name=name, grid=expand_grid(name, DEFAULT_GRIDS[name]))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str | ScenarioSpec
    methods: tuple[MethodConfig, ...]
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    split_ratios: tuple[float, float, float] = DEFAULT_RATIOS
    row_normalize: bool = True
    min_class_count: int = 0
    dense_limit: int = 20_000

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        for m in self.methods:
            if not m.grid:
                raise ValueError(f"method {m.name!r} has an empty grid")


@dataclass
class RunRecord:
    method: str
    seed: int
    best_params: dict | None
    val_acc: float | None
    test_acc: float | None
    wall_time: float
    group_norms: list[tuple[str, float]] | None = None
    error: str | None = None


@dataclass
class RunReport:
    dataset_name: str
    methods: tuple[str, ...]
    records: list[RunRecord] = field(default_factory=list)

    def records_for(self, method: str) -> list[RunRecord]:
        return [r for r in self.records if r.method == method]

    def aggregate(self) -> dict[str, tuple[float, float] | str]:
        """Per-method (mean, std) test accuracy, or a failure marker."""
        out: dict[str, tuple[float, float] | str] = {}
        for method in self.methods:
            accs = [r.test_acc for r in self.records_for(method) if r.error is None]
            if accs:
                out[method] = (float(np.mean(accs)), float(np.std(accs)))
            else:
                errors = {r.error for r in self.records_for(method)}
                out[method] = "O.O.M." if any("capacity" in (e or "") for e in errors) else "FAILED"
        return out

    def ranks(self) -> dict[str, float | None]:
        """Rank of each method's mean accuracy within this dataset (1 = best)."""
        agg = self.aggregate()
        scored = [(m, v[0]) for m, v in agg.items() if isinstance(v, tuple)]
        scored.sort(key=lambda kv: -kv[1])
        ranks: dict[str, float | None] = {m: None for m in self.methods}
        for pos, (m, _) in enumerate(scored, start=1):
            ranks[m] = float(pos)
        return ranks


@dataclass
class GridResult:
    best_params: dict
    model: SparseLinearModel
    val_acc: float
    test_acc: float
    cell_trace: list[tuple[dict, float | str]]


def expand_grid(method_name: str, axes: dict[str, list]) -> tuple[dict, ...]:
    """Cross product of axes in declared key order, rightmost fastest."""
    keys = list(axes)
    cells = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        cell = dict(zip(keys, combo))
        if "T12" in cell:
            t = cell.pop("T12")
            cell["T1"] = t
            cell["T2"] = t
        cells.append(cell)
    return tuple(cells)


def accuracy(pred: np.ndarray, truth: np.ndarray, idx: np.ndarray) -> float:
    """Exact-match fraction over ``idx``."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty index set")
    return float(np.mean(np.asarray(pred)[idx] == np.asarray(truth)[idx]))


def make_split(n: int, labeled_idx, ratios, seed: int) -> Split:
    """Shuffle the labeled nodes by seed and partition by ``ratios``.

    Train and validation sizes use floor rounding; the remainder goes to
    test.
    """
    labeled_idx = np.asarray(labeled_idx, dtype=np.int64)
    if labeled_idx.size == 0:
        raise ValueError("labeled index set is empty")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    perm = np.random.default_rng(seed).permutation(labeled_idx)
    n_train = int(ratios[0] * perm.size)
    n_val = int(ratios[1] * perm.size)
    if n_train == 0 or n_val == 0:
        raise ValueError(
            f"split of {perm.size} labeled nodes leaves an empty train or "
            "validation set; use more nodes or larger ratios"
        )
    return Split(
        train_idx=perm[:n_train],
        val_idx=perm[n_train : n_train + n_val],
        test_idx=perm[n_train + n_val :],
    )


def _dataset_hash(graph, x, labels) -> str:
    hasher = hashlib.sha256()
    for arr in (graph.matrix.indptr, graph.matrix.indices, graph.matrix.data, x, labels):
        hasher.update(np.ascontiguousarray(arr).tobytes())
    return hasher.hexdigest()[:16]


def cached_slimg_features(graph, x, labels, seed: int, cache_dir=None):
    """Build (or load) the four-block features for one dataset and seed."""
    if cache_dir is None:
        return build_slimg_features(graph, x, seed)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{_dataset_hash(graph, x, labels)}_s{seed}.feat"
    if path.exists():
        return load_features(path)
    feats = build_slimg_features(graph, x, seed)
    save_features(feats, path)
    return feats


def _cell_config(cell: dict) -> FitConfig:
    return FitConfig(
        lasso=float(cell.get("lasso", 0.0)),
        group_lasso=float(cell.get("group_lasso", 0.0)),
        max_epochs=int(cell.get("max_epochs", 100)),
        patience=int(cell.get("patience", 5)),
    )


def grid_search(
    method: MethodConfig,
    graph,
    x,
    labels,
    split: Split,
    seed: int,
    cache_dir=None,
    dense_limit: int = 20_000,
) -> GridResult:
    """Evaluate every grid cell; select by validation accuracy.

    Ties keep the first cell in declared order. Only the selected cell's
    test accuracy is computed. Per-cell failures are recorded in the
    trace; if every cell fails the first error is re-raised.
    """
    labels = np.asarray(labels, dtype=np.int64)
    slimg_features = None
    if method.name == "slimg":
        slimg_features = cached_slimg_features(graph, x, labels, seed, cache_dir)
    propagated: dict[tuple, object] = {}

    best = None  # (val_acc, model, cell, features)
    cell_trace: list[tuple[dict, float | str]] = []
    first_error: Exception | None = None
    for cell in method.grid:
        try:
            if slimg_features is not None:
                feats = slimg_features
            else:
                prop_params = {k: v for k, v in cell.items() if k not in _CLASSIFIER_KEYS}
                key = tuple(sorted(prop_params.items()))
                if key not in propagated:
                    propagated[key] = propagate(
                        BaselineSpec(method.name, prop_params), graph, x, dense_limit=dense_limit
                    )
                feats = propagated[key]
            model = classifier.fit(feats, labels, split.train_idx, split.val_idx, _cell_config(cell))
            val_acc = accuracy(classifier.predict(model, feats), labels, split.val_idx)
            cell_trace.append((cell, val_acc))
            if best is None or val_acc > best[0]:
                best = (val_acc, model, cell, feats)
        except (CapacityError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            if first_error is None:
                first_error = exc
            cell_trace.append((cell, f"error: {exc}"))
    if best is None:
        assert first_error is not None
        raise first_error
    val_acc, model, cell, feats = best
    test_acc = accuracy(classifier.predict(model, feats), labels, split.test_idx)
    return GridResult(
        best_params=dict(cell),
        model=model,
        val_acc=val_acc,
        test_acc=test_acc,
        cell_trace=cell_trace,
    )


def _resolve_dataset(cfg: ExperimentConfig, seed: int, real_cache: dict):
    """Return (name, graph, x, labels) for one run.

    Synthetic scenarios are regenerated with the run seed; real datasets
    are loaded once and shared (split noise only).
    """
    if isinstance(cfg.dataset, ScenarioSpec):
        spec = cfg.dataset
        ds = gen_scenario(
            ScenarioSpec(
                structure=spec.structure,
                features=spec.features,
                n=spec.n,
                c=spec.c,
                d=spec.d,
                avg_degree=spec.avg_degree,
                homophily_ratio=spec.homophily_ratio,
                svd_rank=spec.svd_rank,
                seed=seed,
            )
        )
        return spec.name, ds.graph, ds.features, ds.labels
    if "real" not in real_cache:
        spec = str(cfg.dataset)
        if spec.startswith("planetoid:"):
            _, name, root = spec.split(":", 2)
            ds = datasets.load_planetoid(root, name)
        elif spec.startswith("dir:"):
            ds = datasets.load_dataset_dir(spec[4:])
        else:
            ds = datasets.load_dataset_dir(spec)
        ds = datasets.prepare(
            ds, row_normalize=cfg.row_normalize, min_class_count=cfg.min_class_count
        )
        real_cache["real"] = ds
    ds = real_cache["real"]
    return ds.name, ds.graph, ds.features, ds.labels


def run_suite(
    cfg: ExperimentConfig,
    threads: int | None = None,
    cache_dir=None,
    save_model_dir=None,
) -> RunReport:
    """Full cross product of methods x seeds for one dataset."""
    real_cache: dict = {}
    dataset_name = cfg.dataset.name if isinstance(cfg.dataset, ScenarioSpec) else None

    def one_run(method: MethodConfig, seed: int) -> RunRecord:
        t0 = time.perf_counter()
        try:
            name, graph, x, labels = _resolve_dataset(cfg, seed, real_cache)
            split = make_split(graph.n, np.flatnonzero(labels >= 0), cfg.split_ratios, seed)
            result = grid_search(
                method, graph, x, labels, split, seed,
                cache_dir=cache_dir, dense_limit=cfg.dense_limit,
            )
        except CapacityError as exc:
            return RunRecord(
                method=method.name, seed=seed, best_params=None, val_acc=None,
                test_acc=None, wall_time=time.perf_counter() - t0,
                error=f"capacity: {exc}",
            )
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            return RunRecord(
                method=method.name, seed=seed, best_params=None, val_acc=None,
                test_acc=None, wall_time=time.perf_counter() - t0,
                error=str(exc),
            )
        record = RunRecord(
            method=method.name,
            seed=seed,
            best_params=result.best_params,
            val_acc=result.val_acc,
            test_acc=result.test_acc,
            wall_time=time.perf_counter() - t0,
            group_norms=classifier.group_norms(result.model) if method.name == "slimg" else None,
        )
        if save_model_dir is not None:
            path = Path(save_model_dir)
            path.mkdir(parents=True, exist_ok=True)
            classifier.save_model(result.model, path / f"{name}_{method.name}_seed{seed}.model")
        return record

    tasks = [(method, seed) for method in cfg.methods for seed in cfg.seeds]
    if isinstance(cfg.dataset, str):
        # Load the shared dataset up front so worker threads only read it.
        _resolve_dataset(cfg, cfg.seeds[0], real_cache)
        if dataset_name is None:
            dataset_name = real_cache["real"].name
    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda ms: one_run(*ms), tasks))
    else:
        records = [one_run(*ms) for ms in tasks]
    return RunReport(
        dataset_name=dataset_name or "dataset",
        methods=tuple(m.name for m in cfg.methods),
        records=records,
    )


def _fmt_params(params: dict | None) -> str:
    if params is None:
        return ""
    return " ".join(f"{k}={params[k]:.10g}" for k in sorted(params))


def _fmt_norms(norms) -> str:
    if not norms:
        return ""
    return ";".join(f"{name}={val:.6g}" for name, val in norms)


def write_runs_csv(reports: list[RunReport], path) -> None:
    """Per-run records; deliberately excludes wall times for reproducibility."""
    lines = ["dataset,method,seed,best_params,val_acc,test_acc,group_norms,error"]
    for report in reports:
        for r in report.records:
            val = "" if r.val_acc is None else f"{r.val_acc:.6f}"
            test = "" if r.test_acc is None else f"{r.test_acc:.6f}"
            err = (r.error or "").replace(",", ";").replace("\n", " ")
            lines.append(
                f"{report.dataset_name},{r.method},{r.seed},{_fmt_params(r.best_params)},"
                f"{val},{test},{_fmt_norms(r.group_norms)},{err}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_markdown(reports: list[RunReport], path) -> None:
    """Aggregate table: methods x datasets, best per column bolded."""
    methods = list(dict.fromkeys(m for rep in reports for m in rep.methods))
    aggs = {rep.dataset_name: rep.aggregate() for rep in reports}
    ranks = {rep.dataset_name: rep.ranks() for rep in reports}
    names = [rep.dataset_name for rep in reports]

    def cell_text(dataset, method):
        val = aggs[dataset].get(method)
        if val is None:
            return "-"
        if isinstance(val, str):
            return val
        mean, std = val
        text = f"{100 * mean:.1f}±{100 * std:.1f}"
        best = max(
            (v[0] for v in aggs[dataset].values() if isinstance(v, tuple)), default=None
        )
        return f"**{text}**" if best is not None and val[0] == best else text

    lines = ["| Model | " + " | ".join(names) + " | Avg. Acc | Avg. Rank |"]
    lines.append("|" + "---|" * (len(names) + 3))
    for method in methods:
        cells = [cell_text(ds, method) for ds in names]
        means = [aggs[ds][method][0] for ds in names if isinstance(aggs[ds].get(method), tuple)]
        rank_vals = [ranks[ds][method] for ds in names if ranks[ds].get(method) is not None]
        avg_acc = f"{100 * float(np.mean(means)):.1f}" if means else "-"
        avg_rank = f"{float(np.mean(rank_vals)):.1f}" if rank_vals else "-"
        lines.append(f"| {method} | " + " | ".join(cells) + f" | {avg_acc} | {avg_rank} |")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_config(path) -> ExperimentConfig:
    """Parse the line-oriented key=value experiment file.

    Keys before the first ``method=`` line are global; each ``method=``
    opens a section whose keys become grid axes (comma-separated values).
    A section with no keys uses the method's default grid.
    """
    global_kv: dict[str, str] = {}
    sections: list[tuple[str, dict[str, list]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "method":
                if value not in KNOWN_METHODS:
                    raise ValueError(f"{path}:{lineno}: unknown method {value!r}")
                sections.append((value, {}))
            elif sections:
                sections[-1][1][key] = [_parse_scalar(v) for v in value.split(",")]
            else:
                global_kv[key] = value
    if not sections:
        raise ValueError(f"{path}: no method= sections")

    methods = tuple(
        MethodConfig(name=name, grid=expand_grid(name, axes))
        if axes
        else MethodConfig.with_default_grid(name)
        for name, axes in sections
    )
    dataset = _parse_dataset(global_kv)
    seeds = tuple(
        int(s) for s in global_kv.get("seeds", ",".join(map(str, DEFAULT_SEEDS))).split(",")
    )
    ratios = tuple(float(s) for s in global_kv.get("split", "0.025,0.025,0.95").split(","))
    if len(ratios) != 3:
        raise ValueError("split must have three ratios")
    return ExperimentConfig(
        dataset=dataset,
        methods=methods,
        seeds=seeds,
        split_ratios=ratios,  # type: ignore[arg-type]
        row_normalize=global_kv.get("row_normalize", "true").lower() != "false",
        min_class_count=int(global_kv.get("min_class_count", "0")),
        dense_limit=int(global_kv.get("dense_limit", "20000")),
    )


def _parse_scalar(text: str):
    text = text.strip()
    try:
        v = float(text)
    except ValueError:
        return text
    return int(v) if v.is_integer() and ("e" not in text.lower() and "." not in text) else v


def _parse_dataset(kv: dict[str, str]):
    spec = kv.get("dataset")
    if spec is None:
        raise ValueError("config must set dataset=")
    if spec.startswith("scenario:"):
        _, structure, features = spec.split(":", 2)
        return ScenarioSpec(
            structure=Structure(structure),
            features=Features(features),
            n=int(kv.get("n", "2500")),
            c=int(kv.get("c", "4")),
            d=int(kv.get("d", "32")),
            avg_degree=float(kv.get("avg_degree", "10")),
            homophily_ratio=float(kv.get("ratio", "20")),
            svd_rank=int(kv.get("svd_rank", "32")),
            seed=0,
        )
    return spec
