"""Runner-level behavior: determinism, conservation, latency shape."""

import json

import numpy as np
import pytest

from nfslicer.sim import backend as backend_mod
from nfslicer.sim.config import SimConfig
from nfslicer.sim.report import CSV_COLUMNS, report_csv_rows
from nfslicer.sim.runner import apply_axis, pcie_traffic, run, sweep


def quick_cfg(**over) -> SimConfig:
    """Small, fast machine; overrides as section dot key kwargs."""
    cfg = SimConfig()
    cfg.sim.duration_s = 0.004
    cfg.measuring.rate_pps = 25_000.0
    cfg.links.wire_base_ns = 800
    cfg.links.pcie_base_ns = 256
    cfg.links.pcie_gbps = 170.0
    cfg.links.pcie_batch_max = 64
    cfg.links.pcie_batch_overhead_ns = 700
    for path, value in over.items():
        section, key = path.split("__")
        setattr(getattr(cfg, section), key, value)
    return cfg.validate()


def test_same_seed_reproduces_the_report():
    a = run(quick_cfg())
    b = run(quick_cfg())
    assert json.dumps(a.to_dict(), sort_keys=True) == \
        json.dumps(b.to_dict(), sort_keys=True)
    assert report_csv_rows([a]) == report_csv_rows([b])


def test_seed_changes_the_probe_sample():
    a = run(quick_cfg())
    b = run(quick_cfg(sim__seed=2))
    assert a.streams["measuring"].mean_ns != b.streams["measuring"].mean_ns


def test_packet_conservation():
    for cfg in (quick_cfg(),
                quick_cfg(slicing__mode="full"),
                quick_cfg(load__rate_pps=9e6),            # overloaded wire
                quick_cfg(slicing__mode="full", slicing__n_entries=4,
                          sim__cores=2)):
        report = run(cfg)
        assert report.injected["total"] == (report.completed["total"]
                                            + report.dropped["total"]
                                            + report.in_flight)
        assert report.injected["total"] == (report.injected["load"]
                                            + report.injected["measuring"])


def test_stable_system_keeps_backlog_small():
    report = run(quick_cfg())
    assert not report.saturated
    assert report.in_flight < 64
    assert report.dropped["total"] == 0


def test_unloaded_floor_is_exact_and_size_independent():
    # At near-zero load the fastest probe sees the analytic minimum:
    # two wire hops, two solo DMA batches, one service quantum.
    floors = []
    for load_size in (64, 512, 1518):
        cfg = quick_cfg(load__rate_pps=1000.0, load__size=load_size,
                        sim__duration_s=0.02)
        ser_wire = round(1518 * 8 / cfg.links.nic_gbps)
        ser_pcie = round(1518 * 8 / cfg.links.pcie_gbps)
        floor = (2 * (cfg.links.wire_base_ns + ser_wire)
                 + 2 * (cfg.links.pcie_base_ns
                        + cfg.links.pcie_batch_overhead_ns + ser_pcie)
                 + 40)
        m = run(cfg).streams["measuring"]
        assert m.min_ns == floor
        assert 0 <= m.p50_ns - floor <= m.histogram.bucket_width_at(m.p50_ns)
        floors.append(m.min_ns)
    assert len(set(floors)) == 1


def test_probe_latency_grows_with_load_size():
    stats = [run(quick_cfg(load__size=size)).streams["measuring"]
             for size in (64, 512, 1024, 1518)]
    means = [s.mean_ns for s in stats]
    assert means == sorted(means)
    assert means[-1] > means[0] * 1.1
    p50s = [s.p50_ns for s in stats]
    assert p50s == sorted(p50s)


def test_probe_latency_grows_with_load_rate():
    means = [run(quick_cfg(load__rate_pps=rate)).streams["measuring"].mean_ns
             for rate in (1e6, 4e6, 6e6)]
    assert means == sorted(means)
    assert means[-1] > means[0]


def test_slicing_shrinks_host_traffic_and_latency():
    plain = run(quick_cfg())
    sliced = run(quick_cfg(slicing__mode="full"))
    assert sliced.links["pcie_in_gbps"] < plain.links["pcie_in_gbps"] / 10
    assert sliced.links["pcie_reduction_pct"] > 90
    assert plain.links["pcie_reduction_pct"] == 0.0
    assert (sliced.streams["measuring"].mean_ns
            < plain.streams["measuring"].mean_ns)
    eng = sliced.engine
    assert eng["slices"] > 0
    assert eng["splices"] + eng["drops_stale_generation"] == eng["slices"]


def test_wire_overload_sets_saturation():
    report = run(quick_cfg(load__rate_pps=9e6))
    assert report.saturated
    assert report.saturation["analytic_overload"]
    assert report.links["utilization"]["wire_in"] > 1.0


def test_slow_core_forces_stale_drops():
    # Payloads wait out their TTL while the core queue grows.
    cfg = quick_cfg(slicing__mode="full", slicing__n_entries=4,
                    slicing__ttl_init=1)
    cfg.nf.service_ns = dict(cfg.nf.service_ns, l2fwd=2000)
    cfg.validate()
    report = run(cfg)
    assert report.saturated
    assert report.dropped["stale_generation"] > 0
    assert report.engine["drops_stale_generation"] == \
        report.dropped["stale_generation"]
    assert report.injected["total"] == (report.completed["total"]
                                        + report.dropped["total"]
                                        + report.in_flight)


def test_hardware_table_latency_slows_sliced_load():
    fast = run(quick_cfg(slicing__mode="full"))
    cfg = quick_cfg(slicing__mode="full")
    cfg.slicing.hardware_latency = True
    cfg.slicing.hardware_ns = 500.0   # exaggerated to stand out
    slow = run(cfg)
    assert slow.streams["load"].mean_ns > fast.streams["load"].mean_ns + 900


def test_load_mix_draws_both_sizes():
    cfg = quick_cfg(slicing__mode="full")
    cfg.load.mix = [(64, 50.0), (1518, 50.0)]
    cfg.validate()
    report = run(cfg)
    eng = report.engine
    n_load = report.injected["load"]
    # Half the load engages the tables, the other half is undersized.
    engaged = eng["slices"] + eng["passthrough_table_occupied"]
    assert abs(engaged / n_load - 0.5) < 0.05
    assert abs(eng["passthrough_below_threshold"] / n_load - 0.5) < 0.05
    # Everything crossing the host shrinks to ~64B, so the saving tracks
    # the byte share of the big frames, not the packet share.
    assert 85 < report.links["pcie_reduction_pct"] < 95


def test_measuring_stream_can_be_disabled():
    cfg = quick_cfg(slicing__mode="full")
    cfg.measuring.enabled = False
    cfg.validate()
    report = run(cfg)
    assert report.injected["measuring"] == 0
    assert report.streams["measuring"].count == 0
    assert report.streams["measuring"].mean_ns is None
    assert report.streams["load"].count > 0
    # The CSV row renders with blank latency cells.
    lines = report_csv_rows([report]).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].split(",")[3:7] == ["", "", "", ""]


def test_cores_split_the_service_load():
    one = run(quick_cfg())
    two = run(quick_cfg(sim__cores=2))
    u1 = one.links["utilization"]["core"]
    u2 = two.links["utilization"]["core"]
    assert u2 == pytest.approx(u1 / 2, rel=1e-4)   # 6-decimal rounding
    assert two.engine["n_shards"] == 2


def test_pcie_traffic_analytics():
    full = pcie_traffic(quick_cfg(slicing__mode="full"))
    assert full["per_packet_wire_bytes"] == 1518
    assert full["per_packet_host_bytes"] == 64
    assert full["reduction_ratio"] == pytest.approx(1518 / 64)

    cfg = quick_cfg(slicing__mode="partial")
    cfg.slicing.bytes = 160
    cfg.validate()
    tail = pcie_traffic(cfg)
    assert tail["per_packet_host_bytes"] == 72 + (1454 - 160)
    assert tail["reduction_ratio"] == pytest.approx(1518 / 1366)

    cfg = quick_cfg(slicing__mode="partial")
    cfg.slicing.fraction = 0.5
    cfg.validate()
    half = pcie_traffic(cfg)
    assert half["per_packet_host_bytes"] == 72 + 1454 - round(0.5 * 1454)

    off = pcie_traffic(quick_cfg())
    assert off["reduction_ratio"] == 1.0
    assert off["wire_gbytes_per_s"] == pytest.approx(4e6 * 1518 / 1e9)


def test_sim_reduction_matches_analytics_without_probes():
    cfg = quick_cfg(slicing__mode="full")
    cfg.measuring.enabled = False
    cfg.validate()
    report = run(cfg)
    want = pcie_traffic(cfg)
    got_ratio = (report.links["wire_in_gbps"] / report.links["pcie_in_gbps"])
    assert got_ratio == pytest.approx(want["reduction_ratio"], rel=1e-3)


def test_sweep_covers_fraction_axis_monotonically():
    cfg = quick_cfg()
    reports = sweep(cfg, "sliced_fraction", [0.0, 0.5, 1.0])
    reductions = [r.links["pcie_reduction_pct"] for r in reports]
    assert reductions == sorted(reductions)
    assert reductions[0] == 0.0
    assert reductions[-1] > 90
    rows = report_csv_rows(reports, axis="sliced_fraction",
                           values=[0.0, 0.5, 1.0])
    lines = rows.splitlines()
    assert len(lines) == 4
    assert lines[1].startswith("0,sliced_fraction,0.0,")


def test_apply_axis_validates():
    cfg = quick_cfg()
    assert apply_axis(cfg, "packet_size", 512).load.size == 512
    assert apply_axis(cfg, "rate_pps", 2e6).load.rate_pps == 2e6
    frac = apply_axis(cfg, "sliced_fraction", 0.25)
    assert frac.slicing.mode == "partial"
    assert frac.slicing.fraction == 0.25
    little = apply_axis(cfg, "sliced_bytes", 128)
    assert little.slicing.mode == "partial"
    assert little.slicing.bytes == 128
    with pytest.raises(ValueError):
        apply_axis(cfg, "coolness", 1)
    with pytest.raises(Exception):
        sweep(cfg, "packet_size", [])


def test_runner_reports_identical_across_backends():
    if "compiled" not in backend_mod.available_backends():
        pytest.skip("compiled backend not built")
    cfg = quick_cfg(slicing__mode="full", sim__cores=2,
                    slicing__n_entries=8, slicing__ttl_init=2)
    cfg.links.ddio = False
    cfg.validate()
    a = run(cfg, kernels=backend_mod.kernels("python"))
    b = run(cfg, kernels=backend_mod.kernels("compiled"))
    assert json.dumps(a.to_dict(), sort_keys=True) == \
        json.dumps(b.to_dict(), sort_keys=True)


def test_report_percentile_accessor():
    report = run(quick_cfg())
    m = report.streams["measuring"]
    assert report.percentile(50) == m.p50_ns
    assert report.percentile(90, stream="measuring") == m.p90_ns
    with pytest.raises(KeyError):
        report.percentile(50, stream="imaginary")
