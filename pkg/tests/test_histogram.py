"""Log-linear histogram vs exact order statistics."""

import numpy as np
import pytest

from nfslicer.histogram import LatencyHistogram


def exact_nearest_rank(values: np.ndarray, p: float) -> int:
    ordered = np.sort(values)
    rank = max(1, int(np.ceil(p / 100 * len(ordered) - 1e-9)))
    return int(ordered[rank - 1])


def test_percentiles_within_one_bucket_of_exact():
    rng = np.random.default_rng(21)
    values = np.rint(rng.lognormal(8.0, 1.2, 100_000)).astype(np.int64)
    hist = LatencyHistogram.from_values(values)
    for p in (1, 10, 25, 50, 75, 90, 99, 99.9, 100):
        exact = exact_nearest_rank(values, p)
        got = hist.percentile(p)
        width = hist.bucket_width_at(got)
        assert 0 <= got - exact <= width
        if exact >= 64:
            assert (got - exact) / exact <= 0.03125 + 1e-9


def test_mean_and_extrema_are_exact():
    rng = np.random.default_rng(22)
    values = rng.integers(0, 10_000, 50_000, dtype=np.int64)
    hist = LatencyHistogram.from_values(values)
    assert hist.total == 50_000
    assert hist.value_sum == int(values.sum())
    assert hist.mean() == pytest.approx(values.mean(), rel=1e-12)
    assert hist.min_value == int(values.min())
    assert hist.max_value == int(values.max())


def test_small_values_are_exact():
    hist = LatencyHistogram.from_values(np.array([0, 1, 5, 63, 64]))
    assert hist.percentile(50) == 5
    assert hist.percentile(100) == 64
    assert hist.bucket_width_at(5) == 1
    assert hist.bucket_width_at(64) == 1


def test_bucket_widths_grow_with_octave():
    hist = LatencyHistogram()
    assert hist.bucket_width_at(100) == 2       # 64..128 octave, 64/32
    assert hist.bucket_width_at(1000) == 16     # 512..1024 octave
    assert hist.bucket_width_at(6000) == 128    # 4096..8192 octave
    for value in (70, 999, 5555, 123_456, 10**9):
        assert hist.bucket_width_at(value) / value <= 0.03125 + 1e-9


def test_merge_equals_bulk_add():
    rng = np.random.default_rng(23)
    a = rng.integers(0, 100_000, 10_000, dtype=np.int64)
    b = rng.integers(0, 100_000, 7_000, dtype=np.int64)
    merged = LatencyHistogram.from_values(a)
    merged.merge(LatencyHistogram.from_values(b))
    bulk = LatencyHistogram.from_values(np.concatenate([a, b]))
    assert np.array_equal(merged.counts, bulk.counts)
    assert merged.total == bulk.total
    assert merged.value_sum == bulk.value_sum
    assert merged.min_value == bulk.min_value
    assert merged.max_value == bulk.max_value
    for p in (50, 90, 99):
        assert merged.percentile(p) == bulk.percentile(p)


def test_merge_with_empty():
    hist = LatencyHistogram.from_values(np.array([5, 6]))
    hist.merge(LatencyHistogram())
    assert hist.total == 2
    empty = LatencyHistogram()
    empty.merge(hist)
    assert empty.total == 2 and empty.min_value == 5


def test_nonzero_rows_roundtrip():
    values = np.array([5, 5, 70, 70, 70, 100_000])
    hist = LatencyHistogram.from_values(values)
    rows = hist.nonzero_rows()
    assert sum(count for _, count in rows) == len(values)
    assert rows[0] == (5, 2)
    rebuilt = sorted(bound for bound, _ in rows)
    assert rebuilt == [5, 70, hist.percentile(100)]


def test_input_validation():
    hist = LatencyHistogram()
    with pytest.raises(ValueError):
        hist.add(np.array([-1]))
    with pytest.raises(ValueError):
        hist.add(np.array([1 << 50]))
    with pytest.raises(ValueError):
        hist.percentile(50)
    with pytest.raises(ValueError):
        hist.mean()
    hist.add(np.array([5]))
    with pytest.raises(ValueError):
        hist.percentile(0)
    with pytest.raises(ValueError):
        hist.percentile(101)
    hist.add(np.zeros(0, dtype=np.int64))   # empty add is a no-op
    assert hist.total == 1
