"""Command line interface.

Exit codes: 0 success, 2 configuration or usage error, 3 run hit
saturation (offered load exceeded a capacity or the backlog at the
horizon kept growing).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import sizing
from .sim import backend as backend_mod
from .sim.config import (
    ConfigError,
    SimConfig,
    apply_overrides,
    dump_toml,
    load_config,
)
from .sim.report import report_csv_rows
from .sim.runner import SWEEP_AXES, run, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SATURATED = 3

_RATE_SUFFIX = {"k": 1e3, "m": 1e6, "g": 1e9, "t": 1e12}
_TIME_SUFFIX = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}


def parse_rate(text: str) -> float:
    """Bits per second, accepting K/M/G/T suffixes (100G = 100e9)."""
    t = text.strip().lower()
    for suffix, mult in _RATE_SUFFIX.items():
        if t.endswith(suffix):
            return float(t[: -len(suffix)]) * mult
    return float(t)


def parse_time(text: str) -> float:
    """Seconds, accepting s/ms/us/ns suffixes (10us = 1e-5)."""
    t = text.strip().lower()
    for suffix in ("ns", "us", "ms", "s"):
        if t.endswith(suffix):
            return float(t[: -len(suffix)]) * _TIME_SUFFIX[suffix]
    return float(t)


def _load_cfg(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig().validate()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    env_seed = os.environ.get("NFSLICER_SEED")
    if env_seed is not None:
        try:
            cfg.sim.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"NFSLICER_SEED must be an int: {env_seed!r}")
    if getattr(args, "seed", None) is not None:
        cfg.sim.seed = args.seed
    return cfg.validate()


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _report_summary(report) -> str:
    m = report.streams["measuring"]
    lines = []
    if m.count:
        lines.append(
            f"measuring: n={m.count} mean={m.mean_ns:.1f}ns "
            f"p50={m.p50_ns} p90={m.p90_ns} p99={m.p99_ns}")
    else:
        lines.append("measuring: no completed probes")
    lines.append(
        "pcie: {:.3f} Gbit/s in, {:.3f} Gbit/s out, reduction {:.2f}%".format(
            report.links["pcie_in_gbps"], report.links["pcie_out_gbps"],
            report.links["pcie_reduction_pct"]))
    lines.append(
        f"drops: {report.dropped['total']} "
        f"(stale generation {report.dropped['stale_generation']}), "
        f"in flight at horizon: {report.in_flight}")
    if report.saturated:
        lines.append("saturated: yes")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    kernels = backend_mod.kernels(args.backend)
    report = run(cfg, kernels=kernels)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "report.json"),
           json.dumps(report.to_dict(), indent=2) + "\n")
    _write(os.path.join(args.out, "report.csv"), report_csv_rows([report]))
    print(_report_summary(report))
    if report.saturated:
        print("saturation detected; results cover an overloaded system",
              file=sys.stderr)
        return EXIT_SATURATED
    return EXIT_OK


def _parse_values(axis: str, text: str) -> list:
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ConfigError("no sweep values given")
    if axis in ("packet_size", "sliced_bytes"):
        return [int(float(v)) for v in items]
    return [float(v) for v in items]


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    values = _parse_values(args.axis, args.values)
    reports = sweep(cfg, args.axis, values, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    csv_text = report_csv_rows(reports, axis=args.axis, values=values)
    _write(os.path.join(args.out, "sweep.csv"), csv_text)
    print(csv_text, end="")
    if any(r.saturated for r in reports):
        bad = [str(v) for v, r in zip(values, reports) if r.saturated]
        print(f"saturation detected at {args.axis} = {', '.join(bad)}",
              file=sys.stderr)
        return EXIT_SATURATED
    return EXIT_OK


def _parse_points(text: str) -> list[sizing.ScalabilityPoint]:
    points = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"switch point must be servers:utilization, got {part!r}")
        servers, util = part.split(":", 1)
        points.append(sizing.ScalabilityPoint(int(servers), float(util)))
    if not points:
        raise ConfigError("no switch points given")
    return points


def cmd_size(args) -> int:
    out: dict = {}
    entries = sizing.provision_entries(
        parse_rate(args.line_rate), args.threshold, parse_time(args.service_time))
    out["entries"] = entries
    out["sram_bytes"] = sizing.sram_bytes(entries, args.max_payload)
    out["sram_kib"] = round(out["sram_bytes"] / 1024, 3)
    out["min_interarrival_ns"] = round(
        sizing.min_slice_interarrival_s(parse_rate(args.line_rate),
                                        args.threshold) * 1e9, 6)
    out["interface_gbps"] = round(
        sizing.line_rate_gbps(args.width, args.cycle), 6)
    if args.full_size is not None:
        out["data_reduction"] = round(
            sizing.data_reduction(args.full_size, args.sliced_size), 6)
    if args.switch_points:
        points = _parse_points(args.switch_points)
        slope, intercept = sizing.fit_sram_utilization(points, args.fit)
        out["switch_fit"] = {
            "model": args.fit,
            "slope": round(slope, 9),
            "intercept": round(intercept, 9),
            "nic_scale": args.nic_scale,
            "max_servers": sizing.switch_max_servers(
                points, args.fit, nic_scale=args.nic_scale),
        }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_analyze(args) -> int:
    hist = sizing.load_size_histogram(args.hist)
    packet_frac, byte_frac = sizing.traffic_mix(hist, args.threshold)
    print(json.dumps({
        "threshold_bytes": args.threshold,
        "packet_fraction": round(packet_frac, 6),
        "byte_fraction": round(byte_frac, 6),
    }, indent=2))
    return EXIT_OK


def cmd_config(args) -> int:
    if args.action != "dump":
        raise ConfigError(f"unknown config action {args.action!r}")
    cfg = _load_cfg(args)
    print(dump_toml(cfg), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfslicer",
        description="Payload slice-and-splice offload: simulator and sizing models")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_cfg_args(p, seed=True):
        p.add_argument("--config", help="TOML config file (defaults when omitted)")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override a config value")
        if seed:
            p.add_argument("--seed", type=int, help="override the RNG seed")

    p = sub.add_parser("simulate", help="run one simulation")
    add_cfg_args(p)
    p.add_argument("--out", default=".", help="directory for report.json/report.csv")
    p.add_argument("--backend", default="auto",
                   choices=["auto", "compiled", "python"],
                   help="kernel backend (default: compiled when built)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run one config across an axis")
    add_cfg_args(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values, e.g. 0,0.25,0.5")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p.add_argument("--out", default=".", help="directory for sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("size", help="table provisioning and scale models")
    p.add_argument("--line-rate", default="100G", help="port speed, e.g. 100G")
    p.add_argument("--threshold", type=int, default=500,
                   help="slice-worthy frame size in bytes")
    p.add_argument("--service-time", default="10us",
                   help="time a payload must stay parked, e.g. 10us")
    p.add_argument("--max-payload", type=int, default=1454,
                   help="payload bytes one table slot holds")
    p.add_argument("--width", type=int, default=256,
                   help="SRAM interface width in bits")
    p.add_argument("--cycle", type=float, default=2.56,
                   help="SRAM cycle time in ns")
    p.add_argument("--full-size", type=int,
                   help="report the reduction for this unsliced frame size")
    p.add_argument("--sliced-size", type=int, default=64,
                   help="sliced frame size for the reduction")
    p.add_argument("--switch-points",
                   help="measured servers:utilization pairs, e.g. 4:0.26,8:0.38")
    p.add_argument("--fit", default=sizing.WITH_INTERCEPT,
                   choices=[sizing.WITH_INTERCEPT, sizing.ZERO_INTERCEPT])
    p.add_argument("--nic-scale", type=float, default=1.0,
                   help="scale factor on projected per-server table demand")
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("analyze", help="slice-worthiness of a size mix")
    p.add_argument("--hist", required=True,
                   help="CSV of frame sizes: size,count rows or bare sizes")
    p.add_argument("--threshold", type=int, default=500)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("config", help="configuration tools")
    p.add_argument("action", choices=["dump"], help="dump the effective config")
    add_cfg_args(p, seed=False)
    p.set_defaults(func=cmd_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
