"""Evaluation report container and its CSV / JSON serialization.

JSON (``schema_version`` 1)::

    {"schema_version": 1, "method": ..., "config": {...}, "derived": {...},
     "results": {"per_repeat_accuracy": [...], "mean": ..., "std": ...,
                 "failed_queries": ...},
     "sweep": [{"lambda": ..., "mean": ..., "std": ...}, ...],
     "selected_lambda": ... | null,
     "timing": {"per_query_mean_seconds": ..., "count": ..., "threads": ...}}

Everything outside ``timing`` is a deterministic function of the inputs.

CSV columns are ``CSV_COLUMNS``, one row per record:

    repeat   one per split: ``repeat`` index and ``accuracy``
    summary  ``mean`` and ``std`` over repeats (only if any repeat exists)
    sweep    one per grid point: ``lambda``, ``mean``, ``std``
    timing   ``seconds`` (mean per query) and ``count`` (only if count > 0)
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import IoError

SCHEMA_VERSION = 1
CSV_COLUMNS = ["record", "method", "repeat", "lambda", "accuracy", "mean", "std", "seconds", "count"]


@dataclass
class SweepPoint:
    lam: float
    mean: float
    std: float


@dataclass
class EvalReport:
    method: str
    per_repeat_accuracy: list = field(default_factory=list)
    mean: float = 0.0
    std: float = 0.0
    per_query_mean_seconds: float = 0.0
    per_query_count: int = 0
    sweep: list = field(default_factory=list)
    selected_lambda: Optional[float] = None
    failed_queries: int = 0
    threads: int = 1
    config: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)

    @classmethod
    def from_accuracies(cls, method, accuracies, **kwargs):
        mean, std = summarize(accuracies)
        return cls(method, [float(a) for a in accuracies], mean, std, **kwargs)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "config": self.config,
            "derived": self.derived,
            "results": {
                "per_repeat_accuracy": self.per_repeat_accuracy,
                "mean": self.mean,
                "std": self.std,
                "failed_queries": self.failed_queries,
            },
            "sweep": [{"lambda": p.lam, "mean": p.mean, "std": p.std} for p in self.sweep],
            "selected_lambda": self.selected_lambda,
            "timing": {
                "per_query_mean_seconds": self.per_query_mean_seconds,
                "count": self.per_query_count,
                "threads": self.threads,
            },
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {d.get('schema_version')!r}")
        res = d["results"]
        return cls(
            method=d["method"],
            per_repeat_accuracy=list(res["per_repeat_accuracy"]),
            mean=res["mean"],
            std=res["std"],
            per_query_mean_seconds=d["timing"]["per_query_mean_seconds"],
            per_query_count=d["timing"]["count"],
            threads=d["timing"].get("threads", 1),
            sweep=[SweepPoint(p["lambda"], p["mean"], p["std"]) for p in d["sweep"]],
            selected_lambda=d["selected_lambda"],
            failed_queries=res["failed_queries"],
            config=d["config"],
            derived=d["derived"],
        )


def summarize(accuracies):
    """Mean and sample standard deviation (divisor ``n - 1``; 0 for one repeat)."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.size == 0:
        return 0.0, 0.0
    std = float(np.std(acc, ddof=1)) if acc.size > 1 else 0.0
    return float(np.mean(acc)), std


def dumps_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def report_rows(report):
    rows = []
    blank = dict.fromkeys(CSV_COLUMNS, "")
    for i, acc in enumerate(report.per_repeat_accuracy):
        rows.append({**blank, "record": "repeat", "method": report.method, "repeat": i, "accuracy": repr(acc)})
    if report.per_repeat_accuracy:
        rows.append({**blank, "record": "summary", "method": report.method,
                     "mean": repr(report.mean), "std": repr(report.std)})
    for p in report.sweep:
        rows.append({**blank, "record": "sweep", "method": report.method,
                     "lambda": repr(p.lam), "mean": repr(p.mean), "std": repr(p.std)})
    if report.per_query_count:
        rows.append({**blank, "record": "timing", "method": report.method,
                     "seconds": repr(report.per_query_mean_seconds), "count": report.per_query_count})
    return rows


def write_rows_csv(path, columns, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_report(report, path, fmt="json"):
    """Serialize ``report`` to ``path`` as ``"json"`` or ``"csv"``."""
    if fmt == "json":
        write_text(path, dumps_json(report.to_dict()))
    elif fmt == "csv":
        write_rows_csv(path, CSV_COLUMNS, report_rows(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report(path):
    try:
        return EvalReport.from_dict(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
