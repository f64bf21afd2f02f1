"""Command-line front end: ``spdcrc {describe,eval,sweep,bench}``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .classify import METHODS, CrcConfig
from .config import resolve
from .datasets import SYNTHETIC_PRESETS, generate_synthetic, load_dataset, synthetic_spec, write_matrix_file
from .descriptors import DescriptorConfig, covariance_descriptor
from .errors import SpdCrcError
from .evaluation import PreparedDataset, SplitSpec, bench, lambda_sweep, run_protocol
from .reports import dumps_json, write_report, write_rows_csv, write_text

BENCH_SOFT_BOUND_SECONDS = 0.05


class UsageError(Exception):
    pass


def _common(p):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--manifest", help="dataset manifest (JSON)")
    p.add_argument("--synthetic", help=f"synthetic preset: {', '.join(SYNTHETIC_PRESETS)}")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="output path")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--beta", help="'median' or a positive number")
    p.add_argument("--repeats", type=int)
    p.add_argument("--train-per-class", dest="train_per_class", type=int)
    p.add_argument("--error-json", action="store_true", help="print runtime errors as JSON on stderr")


def build_parser():
    parser = argparse.ArgumentParser(prog="spdcrc", description="Classify SPD covariance descriptors of sample sets.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="write per-set covariance descriptors")
    _common(p)

    p = sub.add_parser("eval", help="run the repeated-split protocol for one method")
    _common(p)
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("sweep", help="regularizer sweep for one method")
    _common(p)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--grid", help="comma-separated regularizer values")

    p = sub.add_parser("bench", help="per-query classification time")
    _common(p)
    p.add_argument("--methods", help="comma-separated methods")
    p.add_argument("--max-queries", dest="max_queries", type=int, help="time at most this many probes")
    return parser


def load_source(cfg):
    """Return ``(sets, provenance dict)`` for the configured data source."""
    if bool(cfg.manifest) == bool(cfg.synthetic):
        raise UsageError("give exactly one of --manifest or --synthetic")
    if cfg.manifest:
        return load_dataset(cfg.manifest), {"manifest": str(cfg.manifest)}
    overrides = dict(cfg.synthetic_overrides)
    overrides.setdefault("seed", cfg.seed)
    try:
        spec = synthetic_spec(cfg.synthetic, **overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))
    return generate_synthetic(spec), {"synthetic": cfg.synthetic, "synthetic_spec": spec.to_dict()}


def split_spec(cfg, data):
    smallest = int(min(np.sum(data.labels == c) for c in data.classes))
    train = cfg.train_per_class if cfg.train_per_class is not None else max(1, smallest // 2)
    return SplitSpec(train, cfg.repeats, cfg.seed)


def _provenance(cfg, source, spec):
    d = cfg.provenance()
    d["source"] = source
    d["split"] = {"train_sets_per_class": spec.train_sets_per_class, "repeats": spec.repeats, "seed": spec.seed}
    d["descriptor"] = {"perturbation_scale": DescriptorConfig().perturbation_scale,
                       "perturbation_floor": DescriptorConfig().perturbation_floor}
    return d


def _emit(report, cfg):
    if cfg.output:
        write_report(report, cfg.output, cfg.format)


def cmd_describe(cfg):
    sets, source = load_source(cfg)
    out = Path(cfg.output or "descriptors")
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in sets:
        x = covariance_descriptor(s)
        eig = np.linalg.eigvalsh(x)
        name = f"class{s.label}_{s.set_id}.txt"
        write_matrix_file(out / name, x)
        entries.append({
            "class_id": s.label, "set_id": s.set_id, "file": name, "samples": int(s.samples.shape[0]),
            "dim": int(x.shape[0]), "trace": float(np.trace(x)),
            "min_eigenvalue": float(eig[0]), "max_eigenvalue": float(eig[-1]),
        })
    write_text(out / "summary.json", dumps_json({"source": source, "sets": entries}))
    print(f"wrote {len(entries)} descriptors to {out}")
    return 0


def _method_cfg(cfg):
    return CrcConfig(cfg.lambda1, cfg.lambda2)


def table_row(method, label, mean, std):
    return f"{method:<10} {label:<24} {100 * mean:6.2f} ± {100 * std:5.2f}"


def cmd_eval(cfg):
    sets, source = load_source(cfg)
    data = PreparedDataset.from_sets(sets)
    spec = split_spec(cfg, data)
    report = run_protocol(data, cfg.method, _method_cfg(cfg), spec, cfg.beta_value(), cfg.threads)
    report.config = _provenance(cfg, source, spec)
    report.threads = cfg.threads
    _emit(report, cfg)
    label = cfg.manifest or f"synthetic:{cfg.synthetic}"
    print(table_row(report.method, label, report.mean, report.std))
    return 0


def cmd_sweep(cfg):
    try:
        grid = cfg.grid_values()
    except ValueError:
        raise UsageError(f"malformed grid {cfg.grid!r}")
    if not grid or min(grid) < 0:
        raise UsageError("grid must be a non-empty list of non-negative values")
    sets, source = load_source(cfg)
    data = PreparedDataset.from_sets(sets)
    spec = split_spec(cfg, data)
    report = lambda_sweep(data, cfg.method, grid, _method_cfg(cfg), spec, cfg.beta_value(), cfg.threads)
    report.config = _provenance(cfg, source, spec)
    report.threads = cfg.threads
    _emit(report, cfg)
    for p in report.sweep:
        print(f"lambda={p.lam:<10g} {100 * p.mean:6.2f} ± {100 * p.std:5.2f}")
    print(f"selected lambda={report.selected_lambda:g}")
    return 0


def cmd_bench(cfg):
    methods = [m.strip() for m in cfg.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if not methods or bad:
        raise UsageError(f"unknown or empty methods: {bad or methods}")
    sets, source = load_source(cfg)
    data = PreparedDataset.from_sets(sets)
    spec = split_spec(cfg, data)
    if cfg.max_queries is not None and cfg.max_queries < 1:
        raise UsageError("--max-queries must be >= 1")
    timings = bench(data, methods, _method_cfg(cfg), spec, cfg.beta_value(), cfg.max_queries)
    result = {"schema_version": 1, "kind": "bench", "config": _provenance(cfg, source, spec),
              "soft_bound_seconds": BENCH_SOFT_BOUND_SECONDS, "methods": timings}
    if cfg.output:
        if cfg.format == "csv":
            cols = ["method", "per_query_mean_seconds", "count", "fit_seconds"]
            write_rows_csv(cfg.output, cols, [{"method": m, **t} for m, t in timings.items()])
        else:
            write_text(cfg.output, dumps_json(result))
    for m, t in timings.items():
        print(f"{m:<10} {1000 * t['per_query_mean_seconds']:8.3f} ms/query  (n={t['count']}, fit {t['fit_seconds']:.3f} s)")
        if m == "log_crc" and t["per_query_mean_seconds"] > BENCH_SOFT_BOUND_SECONDS:
            print(f"warning: log_crc per-query time exceeds {1000 * BENCH_SOFT_BOUND_SECONDS:.0f} ms", file=sys.stderr)
    return 0


COMMANDS = {"describe": cmd_describe, "eval": cmd_eval, "sweep": cmd_sweep, "bench": cmd_bench}


def _fail(args, code, exc):
    if getattr(args, "error_json", False):
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    else:
        print(f"spdcrc: error: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "error_json")}
    try:
        cfg = resolve(flags, args.config)
        if args.command == "bench":
            cfg.threads = 1
        if cfg.threads < 1:
            raise UsageError("--threads must be >= 1")
        if cfg.method not in METHODS:
            raise UsageError(f"unknown method {cfg.method!r}")
        try:
            cfg.beta_value()
        except ValueError:
            raise UsageError(f"--beta must be 'median' or a positive number, got {cfg.beta!r}")
        with threadpool_limits(limits=cfg.threads):
            return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(args, 2, exc)
    except (SpdCrcError, OSError, ValueError) as exc:
        return _fail(args, 1, exc)


if __name__ == "__main__":
    sys.exit(main())
