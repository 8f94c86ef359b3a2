"""Log-linear latency histogram with nearest-rank percentiles.

Buckets are 1ns wide up to 64ns, then each power-of-two octave is cut
into 32 linear sub-buckets, keeping the relative bucket width at or
under 3.125% across the full range (top edge beyond 2**47 ns).  Counts
and the value sum are exact integers, so aggregation order never
changes a report.
"""

from __future__ import annotations

import numpy as np

_SUB_BUCKETS = 32
_LINEAR_MAX = 64  # exact 1ns buckets below this
_TOP_OCTAVE = 48


def _build_edges() -> np.ndarray:
    edges = [np.arange(0, _LINEAR_MAX + 1, dtype=np.int64)]
    for k in range(_LINEAR_MAX.bit_length() - 1, _TOP_OCTAVE):
        base = 1 << k
        step = base // _SUB_BUCKETS
        edges.append(np.arange(base + step, 2 * base + 1, step, dtype=np.int64))
    return np.concatenate(edges)


# Inclusive upper bounds of all buckets, shared by every histogram.
_EDGES = _build_edges()


class LatencyHistogram:
    """Histogram of non-negative integer nanosecond values."""

    __slots__ = ("counts", "total", "value_sum", "min_value", "max_value")

    def __init__(self) -> None:
        self.counts = np.zeros(len(_EDGES), dtype=np.int64)
        self.total = 0
        self.value_sum = 0
        self.min_value: int | None = None
        self.max_value: int | None = None

    @classmethod
    def from_values(cls, values: np.ndarray) -> "LatencyHistogram":
        hist = cls()
        hist.add(values)
        return hist

    def add(self, values: np.ndarray) -> None:
        """Record an array of int nanosecond latencies."""
        values = np.asarray(values, dtype=np.int64)
        if values.size == 0:
            return
        if values.min() < 0:
            raise ValueError("latencies must be non-negative")
        if values.max() > _EDGES[-1]:
            raise ValueError(f"latency beyond histogram range: {values.max()}")
        idx = np.searchsorted(_EDGES, values, side="left")
        self.counts += np.bincount(idx, minlength=len(_EDGES))
        self.total += int(values.size)
        self.value_sum += int(values.sum(dtype=np.int64))
        lo, hi = int(values.min()), int(values.max())
        self.min_value = lo if self.min_value is None else min(self.min_value, lo)
        self.max_value = hi if self.max_value is None else max(self.max_value, hi)

    def merge(self, other: "LatencyHistogram") -> None:
        self.counts += other.counts
        self.total += other.total
        self.value_sum += other.value_sum
        for attr in ("min_value", "max_value"):
            theirs = getattr(other, attr)
            mine = getattr(self, attr)
            if theirs is not None:
                pick = min if attr == "min_value" else max
                setattr(self, attr, theirs if mine is None else pick(mine, theirs))

    def mean(self) -> float:
        if self.total == 0:
            raise ValueError("histogram is empty")
        return self.value_sum / self.total

    def percentile(self, p: float) -> int:
        """Nearest-rank percentile, reported as the bucket upper bound.

        Off from the exact order statistic by at most one bucket width.
        """
        if not 0 < p <= 100:
            raise ValueError(f"percentile must be in (0, 100]: {p}")
        if self.total == 0:
            raise ValueError("histogram is empty")
        rank = max(1, int(np.ceil(p / 100 * self.total - 1e-9)))
        cum = np.cumsum(self.counts)
        idx = int(np.searchsorted(cum, rank, side="left"))
        return int(_EDGES[idx])

    def bucket_width_at(self, value: int) -> int:
        """Width of the bucket holding ``value``."""
        idx = int(np.searchsorted(_EDGES, value, side="left"))
        if idx == 0:
            return 1
        return int(_EDGES[idx] - _EDGES[idx - 1])

    def nonzero_rows(self) -> list[tuple[int, int]]:
        """(bucket upper bound, count) for every non-empty bucket."""
        idx = np.nonzero(self.counts)[0]
        return [(int(_EDGES[i]), int(self.counts[i])) for i in idx]
