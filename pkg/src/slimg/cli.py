"""Command-line interface.

Subcommands: ``gen`` (write a synthetic scenario to disk), ``run``
(execute an experiment config), ``sanity`` (the seven-scenario sweep),
and ``inspect`` (per-block norms of a saved model). stdout carries data,
stderr carries diagnostics. Exit codes: 0 success, 1 I/O error,
2 invalid request. The env var SLIMG_CACHE_DIR sets the feature cache.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, classifier
from .bench import ExperimentConfig, MethodConfig, RunReport
from .synth import SCENARIOS, Features, ScenarioSpec, Structure, gen_scenario

SANITY_PASS_THRESHOLD = 0.80
_DEFAULT_SANITY_METHODS = ("slimg", "lr", "sgc")


def _eprint(*args):
    print(*args, file=sys.stderr)


def _cache_dir():
    path = os.environ.get("SLIMG_CACHE_DIR")
    return Path(path) if path else None


def _add_scenario_args(p, with_kind=True):
    if with_kind:
        p.add_argument("--structure", required=True, choices=[s.value for s in Structure])
        p.add_argument("--features", required=True, choices=[f.value for f in Features])
    p.add_argument("--n", type=int, default=2500)
    p.add_argument("--c", type=int, default=4)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--ratio", type=float, default=20.0, help="intra:inter edge probability ratio")
    p.add_argument("--svd-rank", type=int, default=32)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slimg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic scenario dataset")
    _add_scenario_args(p_gen)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output directory")

    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default="results")
    p_run.add_argument("--threads", type=int, default=os.cpu_count())
    p_run.add_argument("--save-model", default=None, help="directory for trained models")

    p_san = sub.add_parser("sanity", help="run the seven-scenario sanity sweep")
    _add_scenario_args(p_san, with_kind=False)
    p_san.add_argument("--methods", default=",".join(_DEFAULT_SANITY_METHODS))
    p_san.add_argument("--seeds", type=int, default=5, help="number of seeds (0..seeds-1)")
    p_san.add_argument("--out-dir", default="sanity-results")
    p_san.add_argument("--threads", type=int, default=os.cpu_count())
    p_san.add_argument("--save-model", default=None)

    p_ins = sub.add_parser("inspect", help="print per-block norms of a saved model")
    p_ins.add_argument("--model", required=True)
    p_ins.add_argument("--top", type=int, default=5, help="top feature indices per class")
    return parser


def cmd_gen(args) -> int:
    try:
        spec = ScenarioSpec(
            structure=Structure(args.structure),
            features=Features(args.features),
            n=args.n,
            c=args.c,
            d=args.d,
            avg_degree=args.avg_degree,
            homophily_ratio=args.ratio,
            svd_rank=args.svd_rank,
            seed=args.seed,
        )
        ds = gen_scenario(spec)
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return 2
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        src, dst = ds.graph.matrix.nonzero()
        keep = src < dst
        np.savetxt(out / "edges.txt", np.column_stack([src[keep], dst[keep]]), fmt="%d")
        np.savetxt(out / "features.csv", ds.features, fmt="%.17g", delimiter=",")
        np.savetxt(out / "labels.txt", ds.labels, fmt="%d")
        manifest = {
            "structure": spec.structure.value,
            "features": spec.features.value,
            "n": spec.n,
            "c": spec.c,
            "d": spec.d,
            "avg_degree": spec.avg_degree,
            "homophily_ratio": spec.homophily_ratio,
            "svd_rank": spec.svd_rank,
            "seed": spec.seed,
            "edges": ds.graph.num_edges,
        }
        (out / "manifest.txt").write_text(
            "".join(f"{k}={v}\n" for k, v in manifest.items()), encoding="utf-8"
        )
    except OSError as exc:
        _eprint(f"I/O error: {exc}")
        return 1
    _eprint(f"wrote {ds.graph.num_edges} edges, {spec.n} nodes to {out}")
    return 0


def _report_timings(reports: list[RunReport]):
    for rep in reports:
        for rec in rep.records:
            _eprint(
                f"[timing] {rep.dataset_name} {rec.method} seed={rec.seed}: "
                f"{rec.wall_time:.2f}s" + (f" ({rec.error})" if rec.error else "")
            )


def cmd_run(args) -> int:
    if not Path(args.config).exists():
        _eprint(f"error: config file not found: {args.config}")
        return 1
    try:
        cfg = bench.parse_config(args.config)
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return 2
    report = bench.run_suite(
        cfg, threads=args.threads, cache_dir=_cache_dir(), save_model_dir=args.save_model
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bench.write_runs_csv([report], out / "runs.csv")
    bench.write_markdown([report], out / "report.md")
    _report_timings([report])
    print((out / "report.md").read_text(encoding="utf-8"), end="")
    return 0


def cmd_sanity(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    unknown = [m for m in methods if m not in bench.KNOWN_METHODS]
    if unknown:
        _eprint(f"error: unknown methods: {', '.join(unknown)}")
        return 2
    if args.seeds < 1:
        _eprint("error: --seeds must be >= 1")
        return 2
    seeds = tuple(range(args.seeds))
    method_cfgs = tuple(MethodConfig.with_default_grid(m) for m in methods)
    reports = []
    for structure, features in SCENARIOS:
        spec = ScenarioSpec(
            structure=structure,
            features=features,
            n=args.n,
            c=args.c,
            d=args.d,
            avg_degree=args.avg_degree,
            homophily_ratio=args.ratio,
            svd_rank=args.svd_rank,
            seed=0,
        )
        cfg = ExperimentConfig(dataset=spec, methods=method_cfgs, seeds=seeds)
        _eprint(f"[sanity] running {spec.name} ...")
        reports.append(
            bench.run_suite(
                cfg, threads=args.threads, cache_dir=_cache_dir(), save_model_dir=args.save_model
            )
        )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bench.write_runs_csv(reports, out / "runs.csv")
    bench.write_markdown(reports, out / "report.md")
    _report_timings(reports)
    print((out / "report.md").read_text(encoding="utf-8"), end="")

    if "slimg" not in methods:
        return 0
    all_pass = True
    for rep in reports:
        agg = rep.aggregate().get("slimg")
        ok = isinstance(agg, tuple) and agg[0] >= SANITY_PASS_THRESHOLD
        all_pass &= ok
        shown = f"{100 * agg[0]:.1f}%" if isinstance(agg, tuple) else str(agg)
        print(f"{'PASS' if ok else 'FAIL'} {rep.dataset_name}: slimg mean accuracy {shown}")
    return 0 if all_pass else 1


def cmd_inspect(args) -> int:
    if not Path(args.model).exists():
        _eprint(f"error: model file not found: {args.model}")
        return 1
    try:
        model = classifier.load_model(args.model)
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return 2
    norms = classifier.group_norms(model)
    print("block norms (descending):")
    for name, val in sorted(norms, key=lambda kv: -kv[1]):
        print(f"  {name}: {val:.6g}")
    print(f"top {args.top} weighted feature indices per class:")
    w = np.abs(model.weights)
    for cls in range(model.num_classes):
        top = np.argsort(-w[:, cls], kind="stable")[: args.top]
        entries = " ".join(f"{int(i)}:{model.weights[i, cls]:+.4g}" for i in top)
        print(f"  class {cls}: {entries}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"gen": cmd_gen, "run": cmd_run, "sanity": cmd_sanity, "inspect": cmd_inspect}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
