"""Simulation driver: schedule synthesis, stage execution, aggregation.

The modelled path is

    client -> wire -> NIC slice -> DMA -> [memory] -> core (NF)
           -> [memory] -> DMA -> NIC splice -> wire -> client

All event times are int64 nanoseconds.  Every float-to-int conversion
(serialization times, jitter draws, slicing arithmetic) happens here,
once, before any kernel runs, so the compiled and pure backends see
identical integer inputs and produce identical reports.

Randomness: one generator seeded from the config draws, in order, the
load size mix, the load flow assignment, and the probe phase jitter.
Load arrivals sit on an exact rate grid; probe arrivals get a uniform
full-period jitter so they sample every phase of that grid.

Ties anywhere in the pipeline resolve by injection sequence number.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..engine import shard_for
from ..histogram import LatencyHistogram
from ..packet import MIN_WIRE_BYTES, Packet
from . import backend as backend_mod
from .config import SimConfig
from .kernels_py import (
    CODE_BELOW_THRESHOLD,
    CODE_BYPASS,
    CODE_EMPTY_SLICE,
    CODE_OCCUPIED,
    CODE_SLICED,
)
from .report import SimReport, StreamStats

SWEEP_AXES = ("packet_size", "rate_pps", "sliced_fraction", "sliced_bytes")

# Header+token bytes of a partially sliced frame (the 64B minimum plus
# the 8B token); the kept payload head rides on top of this.
_PARTIAL_BASE = 72


def slice_plan(sizes: np.ndarray, slicing) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frame slicing candidates for an array of wire sizes.

    Returns (host_size, stored_bytes, code): the frame size crossing
    the host interconnect if the table accepts the packet, the payload
    bytes that would be stashed, and the preset outcome code for frames
    that never engage the table (0 bypass, 3 below threshold, 4 nothing
    to slice).  ``host_size`` is 0 for non-engaging frames.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    payload = np.maximum(sizes - MIN_WIRE_BYTES, 0)
    code = np.zeros(len(sizes), dtype=np.int8)
    if slicing.mode == "off":
        return np.zeros(len(sizes), dtype=np.int64), np.zeros(len(sizes), dtype=np.int64), code

    if slicing.mode == "full":
        k = payload.copy()
    elif slicing.bytes > 0:
        k = np.minimum(slicing.bytes, payload)
    else:
        # Round half to even, matching the kept/stored byte split.
        k = np.rint(slicing.fraction * payload).astype(np.int64)
    rest = payload - k
    host = np.where(rest > 0, _PARTIAL_BASE + rest, MIN_WIRE_BYTES)

    engaged = (sizes >= slicing.threshold) & (k > 0)
    code[(sizes < slicing.threshold)] = CODE_BELOW_THRESHOLD
    code[(sizes >= slicing.threshold) & (k == 0)] = CODE_EMPTY_SLICE
    host = np.where(engaged, host, 0)
    k = np.where(engaged, k, 0)
    return host.astype(np.int64), k.astype(np.int64), code


def _ser_ns(bytes_arr: np.ndarray, gbps: float) -> np.ndarray:
    """Serialization time of each frame on a link, rounded to int ns."""
    return np.rint(np.asarray(bytes_arr, dtype=np.int64) * 8.0 / gbps).astype(np.int64)


def _flow_endpoints(index: int) -> Packet:
    """Synthesise a distinct 5-tuple for load flow ``index``."""
    return Packet(
        ip_src=0x0A000001 + (index % 60000),
        ip_dst=0x0A800001 + (index // 60000),
        l4_src_port=1024 + (index % 60000),
        l4_dst_port=80,
        protocol=17,
    )


_PROBE_FLOW = Packet(ip_src=0x0AFF0001, ip_dst=0x0AFF0002,
                     l4_src_port=9000, l4_dst_port=9001, protocol=17)


def run(cfg: SimConfig, kernels=None) -> SimReport:
    """Execute one run and aggregate its report."""
    cfg.validate()
    k = kernels if kernels is not None else backend_mod.kernels()
    horizon_ns = int(round(cfg.sim.duration_s * 1e9))
    cores = cfg.sim.cores
    rng = np.random.default_rng(cfg.sim.seed)

    # Load stream: exact rate grid.
    n_load = int(round(cfg.load.rate_pps * cfg.sim.duration_s))
    load_period = 1e9 / cfg.load.rate_pps
    t_load = np.rint(np.arange(n_load) * load_period).astype(np.int64)
    if cfg.load.mix:
        mix_sizes = np.array([s for s, _ in cfg.load.mix], dtype=np.int64)
        weights = np.array([w for _, w in cfg.load.mix], dtype=np.float64)
        sizes_load = rng.choice(mix_sizes, size=n_load, p=weights / weights.sum())
    else:
        sizes_load = np.full(n_load, cfg.load.size, dtype=np.int64)
    flow_idx = rng.integers(0, cfg.load.flows, size=n_load)
    flow_shards = np.array(
        [shard_for(_flow_endpoints(f), cores) for f in range(cfg.load.flows)],
        dtype=np.int64)
    shard_load = flow_shards[flow_idx] if n_load else np.zeros(0, dtype=np.int64)

    # Measuring stream: fixed-size probes, uniform phase jitter.
    if cfg.measuring.enabled:
        n_probe = int(round(cfg.measuring.rate_pps * cfg.sim.duration_s))
        probe_period = 1e9 / cfg.measuring.rate_pps
        jitter = rng.uniform(0.0, probe_period, n_probe)
        t_probe = np.rint(np.arange(n_probe) * probe_period + jitter).astype(np.int64)
        sizes_probe = np.full(n_probe, cfg.measuring.size, dtype=np.int64)
        shard_probe = np.full(n_probe, shard_for(_PROBE_FLOW, cores), dtype=np.int64)
    else:
        n_probe = 0
        t_probe = np.zeros(0, dtype=np.int64)
        sizes_probe = np.zeros(0, dtype=np.int64)
        shard_probe = np.zeros(0, dtype=np.int64)

    t0 = np.concatenate([t_load, t_probe])
    sizes = np.concatenate([sizes_load, sizes_probe])
    shard = np.concatenate([shard_load, shard_probe])
    stream = np.concatenate([np.zeros(n_load, dtype=np.int8),
                             np.ones(n_probe, dtype=np.int8)])
    inj = np.arange(len(t0), dtype=np.int64)
    order = np.lexsort((inj, t0))
    t0, sizes, shard, stream = t0[order], sizes[order], shard[order], stream[order]
    n = len(t0)
    seq = np.arange(n, dtype=np.int64)

    # Slicing candidates; probes never engage the tables.
    cand, stored, code = slice_plan(sizes, cfg.slicing)
    cand = np.where(stream == 1, 0, cand).astype(np.int64)
    stored = np.where(stream == 1, 0, stored).astype(np.int64)
    code[stream == 1] = CODE_BYPASS

    ln = cfg.links
    ser_wire_in = _ser_ns(sizes, ln.nic_gbps)
    ser_pcie_full = _ser_ns(sizes, ln.pcie_gbps)
    ser_pcie_sliced = _ser_ns(cand, ln.pcie_gbps)
    use_mem = 0 if ln.ddio else 1
    ser_mem_full = _ser_ns(sizes, ln.mem_gbps)
    ser_mem_sliced = _ser_ns(cand, ln.mem_gbps)
    service = np.full(n, cfg.nf.total_service_ns(), dtype=np.int64)
    hw_ns = int(round(cfg.slicing.hardware_ns)) if cfg.slicing.hardware_latency else 0

    # Client-side wire into the NIC.
    d1 = k.station_pass(t0, ser_wire_in, ln.wire_base_ns, 0, 1)

    # NIC-to-NIC path with interleaved slice/splice table events.
    n_entries = cfg.slicing.n_entries
    gen = np.zeros(cores * n_entries, dtype=np.int64)
    ttl = np.zeros(cores * n_entries, dtype=np.int64)
    slot_bytes = np.zeros(cores * n_entries, dtype=np.int64)
    cursor = np.zeros(cores, dtype=np.int64)
    (pcie_size, _slot_idx, _d5, t6, drop, out_size, code, _busy) = k.path_pass(
        d1, stream, sizes, cand, stored, code, shard, service,
        ser_pcie_full, ser_pcie_sliced, ser_mem_full, ser_mem_sliced,
        gen, ttl, slot_bytes, cursor,
        n_entries, cfg.slicing.ttl_init, cores,
        ln.pcie_base_ns, ln.pcie_batch_overhead_ns, ln.pcie_batch_max,
        use_mem, ln.mem_base_ns, hw_ns)

    # Return wire to the client, survivors only.
    alive = drop == 0
    t6_s, seq_s, t0_s = t6[alive], seq[alive], t0[alive]
    out_s, stream_s = out_size[alive], stream[alive]
    order2 = np.lexsort((seq_s, t6_s))
    t6_s, t0_s, out_s, stream_s = (t6_s[order2], t0_s[order2],
                                   out_s[order2], stream_s[order2])
    ser_wire_out = _ser_ns(out_s, ln.nic_gbps)
    d7 = k.station_pass(t6_s, ser_wire_out, ln.wire_base_ns, 0, 1)
    latency = d7 - t0_s

    # Aggregation.
    done = d7 <= horizon_ns
    hist_load = LatencyHistogram.from_values(latency[done & (stream_s == 0)])
    hist_probe = LatencyHistogram.from_values(latency[done & (stream_s == 1)])

    injected = {"load": int(n_load), "measuring": int(n_probe), "total": int(n)}
    dropped_stale = int(drop.sum())
    dropped = {"stale_generation": dropped_stale, "nf": 0, "total": dropped_stale}
    completed = {
        "load": int(hist_load.total),
        "measuring": int(hist_probe.total),
        "total": int(hist_load.total + hist_probe.total),
    }
    in_flight = injected["total"] - completed["total"] - dropped["total"]

    wire_in_bits = int(sizes.sum(dtype=np.int64)) * 8
    pcie_bits = int(pcie_size.sum(dtype=np.int64)) * 8
    wire_out_bits = int(out_s.sum(dtype=np.int64)) * 8
    core_busy = int(service.sum(dtype=np.int64))
    # A polled DMA engine is wall-busy whenever traffic is pending, so
    # occupancy says nothing about overload.  Compare offered work with
    # capacity instead: each transfer costs its serialization plus an
    # equal share of one full batch's overhead.
    ser_pcie_actual = _ser_ns(pcie_size, ln.pcie_gbps)
    pcie_work = (int(ser_pcie_actual.sum(dtype=np.int64))
                 + n * ln.pcie_batch_overhead_ns / ln.pcie_batch_max)
    utils = {
        "wire_in": int(ser_wire_in.sum(dtype=np.int64)) / horizon_ns,
        "pcie_in": pcie_work / horizon_ns,
        "core": core_busy / (cores * horizon_ns),
        "pcie_out": pcie_work / horizon_ns,
        "wire_out": int(ser_wire_out.sum(dtype=np.int64)) / horizon_ns,
    }
    backlog_limit = max(64, int(0.02 * injected["total"]))
    saturated_runtime = in_flight > backlog_limit
    saturated_analytic = any(u > 1.0 for u in utils.values())

    links = {
        "wire_in_gbps": wire_in_bits / horizon_ns,
        "pcie_in_gbps": pcie_bits / horizon_ns,
        "pcie_out_gbps": pcie_bits / horizon_ns,
        "wire_out_gbps": wire_out_bits / horizon_ns,
        "pcie_reduction_pct":
            0.0 if wire_in_bits == 0 else 100.0 * (1.0 - pcie_bits / wire_in_bits),
        "utilization": {key: round(v, 6) for key, v in utils.items()},
    }

    code = np.asarray(code)
    engine = {
        "n_shards": cores,
        "n_entries": n_entries,
        "slices": int((code == CODE_SLICED).sum()),
        "splices": int(((code == CODE_SLICED) & (drop == 0)).sum()),
        "passthrough_below_threshold": int((code == CODE_BELOW_THRESHOLD).sum()),
        "passthrough_table_occupied": int((code == CODE_OCCUPIED).sum()),
        "passthrough_empty_slice": int((code == CODE_EMPTY_SLICE).sum()),
        "measuring_bypass": int(n_probe),
        "drops_stale_generation": dropped_stale,
        "entries_used": int((ttl > 0).sum()),
        "bytes_used": int(slot_bytes[ttl > 0].sum(dtype=np.int64)),
    }

    return SimReport(
        config=cfg.to_dict(),
        horizon_ns=horizon_ns,
        injected=injected,
        completed=completed,
        dropped=dropped,
        in_flight=int(in_flight),
        saturated=bool(saturated_runtime or saturated_analytic),
        saturation={
            "runtime_backlog": bool(saturated_runtime),
            "analytic_overload": bool(saturated_analytic),
            "in_flight": int(in_flight),
            "backlog_limit": backlog_limit,
        },
        streams={
            "load": StreamStats.from_histogram(hist_load),
            "measuring": StreamStats.from_histogram(hist_probe),
        },
        links=links,
        engine=engine,
    )


def apply_axis(cfg: SimConfig, axis: str, value) -> SimConfig:
    """Copy a config with one sweep axis applied."""
    from .config import from_dict

    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    data = cfg.to_dict()
    if axis == "packet_size":
        data["streams"]["load"]["size"] = int(value)
        data["streams"]["load"]["mix"] = []
    elif axis == "rate_pps":
        data["streams"]["load"]["rate_pps"] = float(value)
    elif axis == "sliced_fraction":
        data["slicing"]["mode"] = "partial"
        data["slicing"]["fraction"] = float(value)
        data["slicing"]["bytes"] = 0
    elif axis == "sliced_bytes":
        data["slicing"]["mode"] = "partial"
        data["slicing"]["bytes"] = int(value)
    return from_dict(data)


def _sweep_one(args) -> SimReport:
    cfg, axis, value = args
    return run(apply_axis(cfg, axis, value))


def sweep(cfg: SimConfig, axis: str, values, jobs: int = 1) -> list[SimReport]:
    """Run the config once per axis value, same seed each time."""
    if not values:
        raise ValueError("sweep needs at least one axis value")
    tasks = [(cfg, axis, v) for v in values]
    for task in tasks:
        apply_axis(cfg, axis, task[2])  # validate every point up front
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_one, tasks))
    return [_sweep_one(task) for task in tasks]


def pcie_traffic(cfg: SimConfig) -> dict:
    """First-order host-interconnect traffic for the load stream.

    Pure arithmetic on the configured rate and size mix; the probe
    stream is excluded.  ``reduction_ratio`` is unsliced over sliced
    per-packet bytes crossing the host interconnect.
    """
    cfg.validate()
    if cfg.load.mix:
        sizes = np.array([s for s, _ in cfg.load.mix], dtype=np.int64)
        weights = np.array([w for _, w in cfg.load.mix], dtype=np.float64)
        weights = weights / weights.sum()
    else:
        sizes = np.array([cfg.load.size], dtype=np.int64)
        weights = np.array([1.0])
    host, _stored, _code = slice_plan(sizes, cfg.slicing)
    host = np.where(host > 0, host, sizes)
    wire_mean = float(sizes @ weights)
    host_mean = float(host @ weights)
    rate = cfg.load.rate_pps
    return {
        "per_packet_wire_bytes": wire_mean,
        "per_packet_host_bytes": host_mean,
        "wire_gbytes_per_s": rate * wire_mean / 1e9,
        "host_gbytes_per_s": rate * host_mean / 1e9,
        "reduction_ratio": wire_mean / host_mean,
    }
