"""Repeated random gallery/probe splits, accuracy aggregation, sweeps, timing."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .classify import (
    METHODS,
    CrcConfig,
    Gallery,
    RidgeSolver,
    euclidean_crc_classify,
    log_crc_classify,
    logek_crc_classify,
    spd_crc_classify,
)
from .datasets import stream
from .descriptors import DescriptorConfig, covariance_descriptor
from .errors import InsufficientSets, SpdCrcError
from .reports import EvalReport, SweepPoint, summarize

log = logging.getLogger(__name__)

DEFAULT_GRID = (1e-4, 1e-3, 5e-3, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0)
SPLIT_STREAM = 3


@dataclass(frozen=True)
class SplitSpec:
    train_sets_per_class: int
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.train_sets_per_class < 1 or self.repeats < 1:
            raise ValueError("train_sets_per_class and repeats must be >= 1")


@dataclass
class PreparedDataset:
    """Per-set descriptors and mean vectors, computed once and reused by every split."""

    descriptors: np.ndarray
    means: np.ndarray
    labels: np.ndarray
    set_ids: list

    @classmethod
    def from_sets(cls, sets, cfg=DescriptorConfig()):
        sets = list(sets)
        return cls(
            np.stack([covariance_descriptor(s, cfg) for s in sets]),
            np.stack([s.mean_vector() for s in sets]),
            np.array([s.label for s in sets], dtype=int),
            [s.set_id for s in sets],
        )

    @property
    def classes(self):
        return np.unique(self.labels)


def _prepared(dataset):
    if isinstance(dataset, PreparedDataset):
        return dataset
    return PreparedDataset.from_sets(dataset)


def split_indices(labels, spec, repeat_index):
    """Seeded per-class shuffle; the first ``train_sets_per_class`` go to the gallery.

    Returns sorted ``(gallery_idx, probe_idx)``. Class ``c`` of repeat ``r``
    uses stream ``(3, r, c)`` of ``spec.seed``.
    """
    labels = np.asarray(labels)
    gallery, probes = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) <= spec.train_sets_per_class:
            raise InsufficientSets(
                f"class {c} has {len(members)} sets, need more than {spec.train_sets_per_class}"
            )
        order = stream(spec.seed, SPLIT_STREAM, repeat_index, int(c)).permutation(len(members))
        gallery.extend(members[order[: spec.train_sets_per_class]])
        probes.extend(members[order[spec.train_sets_per_class:]])
    return np.sort(np.array(gallery, dtype=int)), np.sort(np.array(probes, dtype=int))


def random_split(dataset, spec, repeat_index):
    """Split a list of sets into ``(gallery_sets, probe_sets)``."""
    dataset = list(dataset)
    gi, pi = split_indices([s.label for s in dataset], spec, repeat_index)
    return [dataset[i] for i in gi], [dataset[i] for i in pi]


def fit_classifier(method, data, gallery_idx, cfg, beta=None):
    """Fit caches on the gallery and return ``(classify(index) -> label, derived)``.

    ``derived`` holds values computed during the fit that belong in a report.
    """
    labels = data.labels[gallery_idx]
    if method == "crc":
        solver = RidgeSolver(data.means[gallery_idx].T, cfg.lambda1)

        def classify(i):
            return euclidean_crc_classify(data.means[gallery_idx], labels, data.means[i], cfg, solver).label

        return classify, {}
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    g = Gallery(data.descriptors[gallery_idx], labels).fit(method, cfg, beta)
    derived = {}
    if method == "logek_crc":
        e = g.embedding()
        derived = {"beta": e.beta, "kernel_rank": e.rank}
    fn = {"log_crc": log_crc_classify, "spd_crc": spd_crc_classify}.get(method)

    def classify(i):
        if fn is None:
            return logek_crc_classify(g, data.descriptors[i], cfg).label
        return fn(g, data.descriptors[i], cfg).label

    return classify, derived


def _safe(classify, i):
    try:
        return classify(i)
    except (SpdCrcError, np.linalg.LinAlgError) as exc:
        log.warning("query %d failed: %s", i, exc)
        return None


def run_protocol(dataset, method, cfg=CrcConfig(), spec=SplitSpec(5), beta=None,
                 threads=1, timing_repeat=0):
    """Evaluate ``method`` over ``spec.repeats`` random gallery/probe splits.

    Per-query wall-clock time is measured on repeat ``timing_repeat`` only,
    serially, and covers classification alone (the gallery fit is excluded).
    A query that raises counts as a miss.
    """
    data = _prepared(dataset)
    if len(data.classes) < 2:
        raise InsufficientSets("classification needs at least two classes")
    accuracies, betas, ranks = [], [], []
    failed = 0
    times = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for r in range(spec.repeats):
            gi, pi = split_indices(data.labels, spec, r)
            classify, derived = fit_classifier(method, data, gi, cfg, beta)
            if "beta" in derived:
                betas.append(derived["beta"])
                ranks.append(derived["kernel_rank"])
            if r == timing_repeat or pool is None:
                predicted = []
                for i in pi:
                    t0 = time.perf_counter()
                    predicted.append(_safe(classify, i))
                    if r == timing_repeat:
                        times.append(time.perf_counter() - t0)
            else:
                predicted = list(pool.map(lambda i: _safe(classify, i), pi))
            failed += sum(p is None for p in predicted)
            correct = sum(p == t for p, t in zip(predicted, data.labels[pi]))
            accuracies.append(correct / len(pi))
    finally:
        if pool is not None:
            pool.shutdown()
    derived = {}
    if betas:
        derived = {"beta": betas, "kernel_rank": ranks}
    return EvalReport.from_accuracies(
        method,
        accuracies,
        per_query_mean_seconds=float(np.mean(times)) if times else 0.0,
        per_query_count=len(times),
        failed_queries=failed,
        derived=derived,
    )


def regularizer_name(method):
    return "lambda2" if method == "logek_crc" else "lambda1"


def lambda_sweep(dataset, method, grid=DEFAULT_GRID, cfg=CrcConfig(), spec=SplitSpec(5),
                 beta=None, threads=1):
    """Run the protocol once per regularizer value in ``grid``.

    The returned report carries the run at the best mean accuracy (lowest
    lambda on ties) plus the full sweep curve.
    """
    grid = [float(x) for x in grid]
    if not grid or min(grid) < 0:
        raise ValueError("grid must be a non-empty list of non-negative values")
    data = _prepared(dataset)
    name = regularizer_name(method)
    runs = [run_protocol(data, method, replace(cfg, **{name: lam}), spec, beta, threads) for lam in grid]
    best = min(range(len(grid)), key=lambda k: (-runs[k].mean, grid[k]))
    report = runs[best]
    report.sweep = [SweepPoint(lam, r.mean, r.std) for lam, r in zip(grid, runs)]
    report.selected_lambda = grid[best]
    return report


def bench(dataset, methods, cfg=CrcConfig(), spec=SplitSpec(5), beta=None, max_queries=None):
    """Per-query classification time per method on split 0 (fit timed separately).

    ``max_queries`` caps the number of timed probes (first ones in index order).
    """
    data = _prepared(dataset)
    gi, pi = split_indices(data.labels, spec, 0)
    if max_queries is not None:
        pi = pi[:max_queries]
    out = {}
    for method in methods:
        t0 = time.perf_counter()
        classify, _ = fit_classifier(method, data, gi, cfg, beta)
        fit_seconds = time.perf_counter() - t0
        times = []
        for i in pi:
            t0 = time.perf_counter()
            _safe(classify, i)
            times.append(time.perf_counter() - t0)
        out[method] = {
            "per_query_mean_seconds": float(np.mean(times)),
            "count": len(times),
            "fit_seconds": fit_seconds,
        }
    return out


__all__ = [
    "DEFAULT_GRID",
    "EvalReport",
    "PreparedDataset",
    "SplitSpec",
    "bench",
    "fit_classifier",
    "lambda_sweep",
    "random_split",
    "run_protocol",
    "split_indices",
    "summarize",
]
