"""Simulation report: per-stream latency stats, link usage, counters.

A report is a pure value derived from (config, seed); serialising the
same report twice yields byte-identical output, which is what makes
runs diffable.
"""

from __future__ import annotations

import io
import csv as csvmod
from dataclasses import dataclass, field

from ..histogram import LatencyHistogram

CSV_COLUMNS = [
    "run_id", "axis", "axis_value",
    "mean_ns", "p50_ns", "p90_ns", "p99_ns",
    "pcie_in_gbps", "pcie_out_gbps",
    "drops_total", "drops_stale_gen", "reduction_pct",
]


@dataclass
class StreamStats:
    """Latency summary of one stream's completed packets."""

    count: int = 0
    mean_ns: float | None = None
    min_ns: int | None = None
    max_ns: int | None = None
    p50_ns: int | None = None
    p90_ns: int | None = None
    p99_ns: int | None = None
    histogram: LatencyHistogram = field(default_factory=LatencyHistogram)

    @classmethod
    def from_histogram(cls, hist: LatencyHistogram) -> "StreamStats":
        if hist.total == 0:
            return cls(histogram=hist)
        return cls(
            count=hist.total,
            mean_ns=hist.mean(),
            min_ns=hist.min_value,
            max_ns=hist.max_value,
            p50_ns=hist.percentile(50),
            p90_ns=hist.percentile(90),
            p99_ns=hist.percentile(99),
            histogram=hist,
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean_ns": None if self.mean_ns is None else round(self.mean_ns, 3),
            "min_ns": self.min_ns,
            "max_ns": self.max_ns,
            "p50_ns": self.p50_ns,
            "p90_ns": self.p90_ns,
            "p99_ns": self.p99_ns,
            "histogram": [list(row) for row in self.histogram.nonzero_rows()],
        }


@dataclass
class SimReport:
    """Everything one run produced."""

    config: dict
    horizon_ns: int
    injected: dict
    completed: dict
    dropped: dict
    in_flight: int
    saturated: bool
    saturation: dict
    streams: dict
    links: dict
    engine: dict

    def percentile(self, p: float, stream: str = "measuring") -> int:
        """Nearest-rank latency percentile of a stream."""
        if stream not in self.streams:
            raise KeyError(f"unknown stream {stream!r}")
        return self.streams[stream].histogram.percentile(p)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "horizon_ns": self.horizon_ns,
            "injected": self.injected,
            "completed": self.completed,
            "dropped": self.dropped,
            "in_flight": self.in_flight,
            "saturated": self.saturated,
            "saturation": self.saturation,
            "streams": {name: s.to_dict() for name, s in self.streams.items()},
            "links": self.links,
            "engine": self.engine,
        }

    def csv_row(self, run_id: int = 0, axis: str = "", axis_value="") -> list[str]:
        """One CSV row summarising the measuring stream."""
        m: StreamStats = self.streams["measuring"]

        def num(value, fmt):
            return "" if value is None else fmt % value

        return [
            str(run_id),
            axis,
            "" if axis_value == "" else str(axis_value),
            num(m.mean_ns, "%.3f"),
            num(m.p50_ns, "%d"),
            num(m.p90_ns, "%d"),
            num(m.p99_ns, "%d"),
            "%.6f" % self.links["pcie_in_gbps"],
            "%.6f" % self.links["pcie_out_gbps"],
            str(self.dropped["total"]),
            str(self.dropped["stale_generation"]),
            "%.4f" % self.links["pcie_reduction_pct"],
        ]


def report_csv_rows(reports, axis: str = "", values=None) -> str:
    """Render reports as CSV text with the stable column set."""
    if values is None:
        values = [""] * len(reports)
    buf = io.StringIO()
    writer = csvmod.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for run_id, (report, value) in enumerate(zip(reports, values)):
        writer.writerow(report.csv_row(run_id, axis, value))
    return buf.getvalue()
