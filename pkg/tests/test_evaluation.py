from collections import Counter
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest

from spdcrc.classify import CrcConfig
from spdcrc.datasets import SyntheticSpec, generate_synthetic, synthetic_spec
from spdcrc.descriptors import SampleSet
from spdcrc.errors import InsufficientSets
from spdcrc.evaluation import (
    DEFAULT_GRID,
    PreparedDataset,
    SplitSpec,
    bench,
    lambda_sweep,
    random_split,
    run_protocol,
    split_indices,
)

SMALL = SyntheticSpec(num_classes=2, sets_per_class=4, samples_per_set=30, ambient_dim=4, seed=5)


@pytest.fixture(scope="module")
def small():
    return PreparedDataset.from_sets(generate_synthetic(SMALL))


class TestSplits:
    def test_shape_and_disjoint(self):
        sets = generate_synthetic(SMALL)
        gallery, probes = random_split(sets, SplitSpec(2, seed=1), 0)
        assert len(gallery) == 4 and len(probes) == 4
        assert not {s.set_id for s in gallery} & {s.set_id for s in probes}
        assert Counter(s.label for s in gallery) == {0: 2, 1: 2}

    def test_deterministic(self):
        labels = np.repeat([0, 1, 2], 5)
        a = split_indices(labels, SplitSpec(2, seed=4), 3)
        b = split_indices(labels, SplitSpec(2, seed=4), 3)
        npt.assert_array_equal(a[0], b[0])
        c = split_indices(labels, SplitSpec(2, seed=4), 4)
        assert not np.array_equal(a[0], c[0])

    def test_frequency_census(self):
        labels = np.zeros(10, dtype=int)
        counts = np.zeros(10)
        for r in range(1000):
            gallery, _ = split_indices(labels, SplitSpec(5, seed=0), r)
            counts[gallery] += 1
        assert np.all(np.abs(counts / 1000 - 0.5) <= 0.05)

    def test_insufficient(self):
        with pytest.raises(InsufficientSets):
            split_indices(np.array([0, 0, 1]), SplitSpec(1), 0)
        with pytest.raises(ValueError):
            SplitSpec(0)


class TestProtocol:
    def test_separable(self, small):
        r = run_protocol(small, "log_crc", CrcConfig(), SplitSpec(2, repeats=3))
        assert len(r.per_repeat_accuracy) == 3
        assert r.mean == 1.0 and r.failed_queries == 0
        assert r.per_query_count == 4

    def test_single_repeat_std(self, small):
        assert run_protocol(small, "crc", CrcConfig(), SplitSpec(2, repeats=1)).std == 0.0

    @pytest.mark.parametrize("method", ["log_crc", "logek_crc", "crc", "spd_crc"])
    def test_accuracy_bounds_and_stats(self, small, method):
        r = run_protocol(small, method, CrcConfig(), SplitSpec(2, repeats=4))
        assert all(0.0 <= a <= 1.0 for a in r.per_repeat_accuracy)
        assert abs(r.mean - np.mean(r.per_repeat_accuracy)) <= 1e-12
        assert abs(r.std - np.std(r.per_repeat_accuracy, ddof=1)) <= 1e-12

    def test_kernel_derived(self, small):
        r = run_protocol(small, "logek_crc", CrcConfig(), SplitSpec(2, repeats=2))
        assert len(r.derived["beta"]) == 2 and all(b > 0 for b in r.derived["beta"])
        assert all(1 <= k <= 4 for k in r.derived["kernel_rank"])

    def test_threads_do_not_change_results(self, small):
        spec = SplitSpec(2, repeats=4)
        a = run_protocol(small, "logek_crc", CrcConfig(), spec, threads=1)
        b = run_protocol(small, "logek_crc", CrcConfig(), spec, threads=4)
        assert a.per_repeat_accuracy == b.per_repeat_accuracy

    def test_sets_input_equals_prepared(self, small):
        spec = SplitSpec(2, repeats=2)
        a = run_protocol(generate_synthetic(SMALL), "spd_crc", CrcConfig(), spec)
        b = run_protocol(small, "spd_crc", CrcConfig(), spec)
        assert a.per_repeat_accuracy == b.per_repeat_accuracy

    def test_failed_query_counts_as_miss(self, monkeypatch, small):
        import spdcrc.evaluation as ev

        original = ev.fit_classifier

        def flaky(*args, **kwargs):
            classify, derived = original(*args, **kwargs)

            def wrapped(i):
                if i == 1:
                    raise ev.SpdCrcError("boom")
                return classify(i)
            return wrapped, derived

        monkeypatch.setattr(ev, "fit_classifier", flaky)
        r = run_protocol(small, "log_crc", CrcConfig(), SplitSpec(2, repeats=6))
        assert r.failed_queries >= 1
        assert min(r.per_repeat_accuracy) < 1.0

    def test_one_class_rejected(self):
        sets = [SampleSet(0, np.random.default_rng(i).standard_normal((5, 2))) for i in range(3)]
        with pytest.raises(InsufficientSets):
            run_protocol(sets, "crc", CrcConfig(), SplitSpec(1))


class TestSweep:
    def test_default_grid_contains_reported_values(self):
        assert {0.01, 0.05, 0.1, 0.5, 1.0} <= set(DEFAULT_GRID)

    def test_single_point(self, small):
        r = lambda_sweep(small, "log_crc", [0.3], CrcConfig(), SplitSpec(2, repeats=2))
        assert len(r.sweep) == 1 and r.selected_lambda == 0.3

    def test_matches_independent_runs(self, small):
        spec = SplitSpec(2, repeats=3)
        grid = [1e-3, 0.5, 50.0]
        r = lambda_sweep(small, "logek_crc", grid, CrcConfig(), spec)
        for p in r.sweep:
            ref = run_protocol(small, "logek_crc", CrcConfig(lambda2=p.lam), spec)
            assert abs(p.mean - ref.mean) <= 1e-12 and abs(p.std - ref.std) <= 1e-12
        best = max(p.mean for p in r.sweep)
        assert r.selected_lambda == min(p.lam for p in r.sweep if p.mean == best)
        assert r.mean == best

    def test_tie_break_lowest(self, small):
        r = lambda_sweep(small, "log_crc", [0.5, 0.01, 0.1], CrcConfig(), SplitSpec(2, repeats=1))
        assert all(p.mean == 1.0 for p in r.sweep)
        assert r.selected_lambda == 0.01

    def test_invalid_grid(self, small):
        with pytest.raises(ValueError):
            lambda_sweep(small, "log_crc", [], CrcConfig(), SplitSpec(2))
        with pytest.raises(ValueError):
            lambda_sweep(small, "log_crc", [-1.0], CrcConfig(), SplitSpec(2))


def test_bench_counts(small):
    out = bench(small, ["log_crc", "logek_crc"], CrcConfig(), SplitSpec(2))
    assert set(out) == {"log_crc", "logek_crc"}
    for t in out.values():
        assert t["count"] == 4 and t["per_query_mean_seconds"] > 0 and t["fit_seconds"] >= 0
    assert bench(small, ["crc"], CrcConfig(), SplitSpec(2), max_queries=1)["crc"]["count"] == 1


def test_crc_not_better_than_log_on_default():
    data = PreparedDataset.from_sets(generate_synthetic(replace(synthetic_spec("default"), samples_per_set=40)))
    spec = SplitSpec(3, repeats=3, seed=7)
    log = run_protocol(data, "log_crc", CrcConfig(), spec)
    crc = run_protocol(data, "crc", CrcConfig(), spec)
    assert crc.mean <= log.mean
