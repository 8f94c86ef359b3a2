"""Analytical sizing of the payload tables and deployment-scale models.

Covers three questions: how many table slots a NIC needs to cover one
service time at line rate, how much SRAM those slots cost, and how many
servers a switch-resident variant could host before its SRAM budget is
spent.  Also classifies a traffic size mix by how much of it is worth
slicing.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass

from .packet import MAX_PAYLOAD_BYTES, MIN_WIRE_BYTES


def min_slice_interarrival_s(line_rate_bps: float, threshold_bytes: int) -> float:
    """Shortest gap between slice-worthy frames at line rate."""
    if line_rate_bps <= 0:
        raise ValueError("line_rate_bps must be positive")
    if threshold_bytes < MIN_WIRE_BYTES:
        raise ValueError(f"threshold below minimum frame size: {threshold_bytes}")
    return threshold_bytes * 8 / line_rate_bps


def provision_entries(line_rate_bps: float, threshold_bytes: int,
                      service_time_s: float) -> int:
    """Table slots needed to absorb one service time of slice-worthy
    arrivals at line rate (worst case: back-to-back threshold-size
    frames)."""
    if service_time_s <= 0:
        raise ValueError("service_time_s must be positive")
    gap = min_slice_interarrival_s(line_rate_bps, threshold_bytes)
    raw = service_time_s / gap
    # Relative epsilon absorbs float noise when the ratio is integral
    # (e.g. 10us / 40ns must give exactly 250 slots, not 251).
    return max(1, math.ceil(raw * (1 - 1e-12)))


def sram_bytes(n_entries: int, max_payload_bytes: int = MAX_PAYLOAD_BYTES) -> int:
    """Payload-table SRAM footprint: every slot sized for the largest
    payload."""
    if n_entries < 1 or max_payload_bytes < 1:
        raise ValueError("n_entries and max_payload_bytes must be positive")
    return n_entries * max_payload_bytes


def line_rate_gbps(interface_width_bits: int, cycle_time_ns: float) -> float:
    """Throughput of a memory interface moving ``width`` bits per cycle."""
    if interface_width_bits < 1 or cycle_time_ns <= 0:
        raise ValueError("width and cycle time must be positive")
    return interface_width_bits / cycle_time_ns


def data_reduction(full_bytes: int, sliced_bytes: int = MIN_WIRE_BYTES) -> float:
    """How many times smaller a sliced frame is on the host path."""
    if full_bytes < sliced_bytes or sliced_bytes < 1:
        raise ValueError("need full_bytes >= sliced_bytes >= 1")
    return full_bytes / sliced_bytes


@dataclass(frozen=True)
class SizingInput:
    """Inputs for one NIC provisioning question."""

    line_rate_bps: float = 100e9
    threshold_bytes: int = 500
    service_time_s: float = 10e-6
    max_payload_bytes: int = MAX_PAYLOAD_BYTES
    interface_width_bits: int = 256
    cycle_time_ns: float = 2.56

    def entries(self) -> int:
        return provision_entries(self.line_rate_bps, self.threshold_bytes,
                                 self.service_time_s)

    def sram(self) -> int:
        return sram_bytes(self.entries(), self.max_payload_bytes)

    def interface_gbps(self) -> float:
        return line_rate_gbps(self.interface_width_bits, self.cycle_time_ns)


@dataclass(frozen=True)
class ScalabilityPoint:
    """Measured SRAM utilization hosting ``servers`` servers."""

    servers: int
    sram_utilization: float

    def __post_init__(self) -> None:
        if self.servers < 1:
            raise ValueError("servers must be positive")
        if not 0 < self.sram_utilization <= 1:
            raise ValueError("sram_utilization must be in (0, 1]")


WITH_INTERCEPT = "with-intercept"
ZERO_INTERCEPT = "zero-intercept"


def fit_sram_utilization(points: list[ScalabilityPoint],
                         fit: str = WITH_INTERCEPT) -> tuple[float, float]:
    """Fit utilization = intercept + slope * servers.

    ``with-intercept`` is a least-squares line (exact through two
    points).  ``zero-intercept`` forces the line through the origin
    using the smallest observed per-server cost, i.e. the most
    optimistic extrapolation the data supports.
    """
    if fit == WITH_INTERCEPT:
        if len({p.servers for p in points}) < 2:
            raise ValueError("with-intercept fit needs two distinct server counts")
        slope, intercept = statistics.linear_regression(
            [p.servers for p in points], [p.sram_utilization for p in points])
    elif fit == ZERO_INTERCEPT:
        if not points:
            raise ValueError("zero-intercept fit needs at least one point")
        slope = min(p.sram_utilization / p.servers for p in points)
        intercept = 0.0
    else:
        raise ValueError(f"unknown fit: {fit!r}")
    if slope <= 0:
        raise ValueError("utilization must grow with server count")
    return slope, intercept


def switch_max_servers(points: list[ScalabilityPoint],
                       fit: str = WITH_INTERCEPT,
                       nic_scale: float = 1.0,
                       budget: float = 1.0) -> int:
    """Servers a switch can host before projected SRAM utilization
    exceeds ``budget``.

    ``nic_scale`` scales the whole projection for a fabric whose
    per-server table demand differs from the measured NIC's (for
    example a faster port speed); values above 1 shrink the answer.
    """
    if nic_scale <= 0 or budget <= 0:
        raise ValueError("nic_scale and budget must be positive")
    slope, intercept = fit_sram_utilization(points, fit)
    headroom = budget / nic_scale - intercept
    if headroom < 0:
        return 0
    return math.floor(headroom / slope + 1e-9)


def traffic_mix(histogram: list[tuple[int, int]],
                threshold_bytes: int) -> tuple[float, float]:
    """Fractions of packets and of bytes at or above the slice threshold.

    ``histogram`` is (frame_size, count) pairs.  The byte fraction is
    what matters for offload: a small share of packets can still carry
    most of the bytes.
    """
    total_packets = 0
    total_bytes = 0
    big_packets = 0
    big_bytes = 0
    for size, count in histogram:
        if size < 1 or count < 0:
            raise ValueError(f"bad histogram row: ({size}, {count})")
        total_packets += count
        total_bytes += size * count
        if size >= threshold_bytes:
            big_packets += count
            big_bytes += size * count
    if total_packets == 0:
        raise ValueError("histogram is empty")
    return big_packets / total_packets, big_bytes / total_bytes


def load_size_histogram(path: str) -> list[tuple[int, int]]:
    """Read a frame-size histogram from CSV.

    Accepts (size, count) rows or bare per-packet size rows (count 1).
    A non-numeric first row is treated as a header and skipped.
    """
    rows: list[tuple[int, int]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            row = [cell.strip() for cell in row if cell.strip()]
            if not row:
                continue
            try:
                size = int(row[0])
                count = int(row[1]) if len(row) > 1 else 1
            except ValueError:
                if lineno == 0:
                    continue
                raise ValueError(f"{path}:{lineno + 1}: bad histogram row {row!r}")
            rows.append((size, count))
    if not rows:
        raise ValueError(f"{path}: no histogram rows")
    return rows
