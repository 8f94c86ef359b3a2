"""Simulation configuration: TOML schema, validation, overrides.

The schema is strict: unknown keys are rejected so a typo cannot
silently fall back to a default.  ``dump_toml`` emits every effective
value in a fixed order, and loading that dump reproduces the config
exactly, which keeps experiment files self-describing.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..nf import DEFAULT_SERVICE_NS
from ..packet import MAX_WIRE_BYTES, MIN_WIRE_BYTES

SLICING_MODES = ("off", "full", "partial")
PIPELINE_NAMES = tuple(DEFAULT_SERVICE_NS)


class ConfigError(ValueError):
    """Configuration file or override is invalid."""


@dataclass
class LoadSpec:
    """Background traffic stream exercising the path under test."""

    rate_pps: float = 4e6
    size: int = 1518
    # Optional [[size, weight], ...] mix; overrides ``size`` when set.
    mix: list[tuple[int, float]] = field(default_factory=list)
    flows: int = 64


@dataclass
class MeasuringSpec:
    """Low-rate fixed-size probe stream whose latency gets reported.

    Probes bypass slicing so the bytes they measure always cross the
    host interconnect in full.
    """

    enabled: bool = True
    rate_pps: float = 1000.0
    size: int = 1518


@dataclass
class NfSpec:
    """Which functions run on the core and their per-packet cost."""

    pipeline: list[str] = field(default_factory=lambda: ["l2fwd"])
    service_ns: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_SERVICE_NS))

    def total_service_ns(self) -> int:
        return sum(self.service_ns[name] for name in self.pipeline)


@dataclass
class SlicingSpec:
    """Payload offload policy at the NIC."""

    mode: str = "off"
    # ``partial`` slices round(fraction * payload) trailing bytes, or a
    # fixed byte count when ``bytes`` is positive.
    fraction: float = 1.0
    bytes: int = 0
    threshold: int = 500
    n_entries: int = 256
    ttl_init: int = 10
    # Optional per-table-access latency (a handful of SRAM cycles).
    hardware_latency: bool = False
    hardware_ns: float = 12.8


@dataclass
class LinksSpec:
    """Link speeds and per-hop latencies along the path.

    With ``batch_max`` 1 and zero overhead the DMA stations reduce to
    plain FIFO links (departure = max(arrival + base, previous
    departure) + size / bandwidth).  Positive overhead models per-DMA
    doorbell/descriptor cost shared by the frames a poll picks up.
    """

    nic_gbps: float = 100.0
    wire_base_ns: int = 1000
    pcie_gbps: float = 126.0
    pcie_base_ns: int = 500
    pcie_batch_max: int = 1
    pcie_batch_overhead_ns: int = 0
    # Direct cache access: payloads land in LLC. Off adds a memory hop
    # on both sides of the core.
    ddio: bool = True
    mem_gbps: float = 300.0
    mem_base_ns: int = 60


@dataclass
class SimSpec:
    """Run horizon and reproducibility knobs."""

    duration_s: float = 0.2
    seed: int = 1
    cores: int = 1


@dataclass
class SimConfig:
    sim: SimSpec = field(default_factory=SimSpec)
    load: LoadSpec = field(default_factory=LoadSpec)
    measuring: MeasuringSpec = field(default_factory=MeasuringSpec)
    nf: NfSpec = field(default_factory=NfSpec)
    slicing: SlicingSpec = field(default_factory=SlicingSpec)
    links: LinksSpec = field(default_factory=LinksSpec)

    def validate(self) -> "SimConfig":
        s = self.sim
        if s.duration_s <= 0:
            raise ConfigError("sim.duration_s must be positive")
        if s.seed < 0:
            raise ConfigError("sim.seed must be non-negative")
        if not 1 <= s.cores <= 256:
            raise ConfigError("sim.cores must be in 1..256")

        ld = self.load
        if ld.rate_pps <= 0:
            raise ConfigError("streams.load.rate_pps must be positive")
        if ld.flows < 1:
            raise ConfigError("streams.load.flows must be positive")
        for size in [ld.size] + [sz for sz, _ in ld.mix]:
            if not MIN_WIRE_BYTES <= size <= MAX_WIRE_BYTES:
                raise ConfigError(
                    f"frame size must be in {MIN_WIRE_BYTES}..{MAX_WIRE_BYTES}: {size}")
        if any(w <= 0 for _, w in ld.mix):
            raise ConfigError("mix weights must be positive")

        m = self.measuring
        if m.enabled and m.rate_pps <= 0:
            raise ConfigError("streams.measuring.rate_pps must be positive")
        if not MIN_WIRE_BYTES <= m.size <= MAX_WIRE_BYTES:
            raise ConfigError(f"streams.measuring.size out of range: {m.size}")

        nf = self.nf
        if not nf.pipeline:
            raise ConfigError("nf.pipeline must list at least one function")
        for name in nf.pipeline:
            if name not in PIPELINE_NAMES:
                raise ConfigError(
                    f"unknown nf {name!r}; choose from {', '.join(PIPELINE_NAMES)}")
        for name, ns in nf.service_ns.items():
            if name not in PIPELINE_NAMES:
                raise ConfigError(f"service_ns for unknown nf {name!r}")
            if ns < 1:
                raise ConfigError(f"nf.service_ns.{name} must be positive")

        sl = self.slicing
        if sl.mode not in SLICING_MODES:
            raise ConfigError(
                f"slicing.mode must be one of {', '.join(SLICING_MODES)}: {sl.mode!r}")
        if not 0 <= sl.fraction <= 1:
            raise ConfigError("slicing.fraction must be in [0, 1]")
        if sl.bytes < 0:
            raise ConfigError("slicing.bytes must be non-negative")
        if sl.threshold < MIN_WIRE_BYTES:
            raise ConfigError(f"slicing.threshold below {MIN_WIRE_BYTES}")
        n = sl.n_entries
        if n < 2 or n & (n - 1):
            raise ConfigError("slicing.n_entries must be a power of two >= 2")
        if sl.ttl_init < 1:
            raise ConfigError("slicing.ttl_init must be positive")
        if sl.hardware_ns < 0:
            raise ConfigError("slicing.hardware_ns must be non-negative")

        ln = self.links
        for key in ("nic_gbps", "pcie_gbps", "mem_gbps"):
            if getattr(ln, key) <= 0:
                raise ConfigError(f"links.{key} must be positive")
        for key in ("wire_base_ns", "pcie_base_ns", "pcie_batch_overhead_ns",
                    "mem_base_ns"):
            if getattr(ln, key) < 0:
                raise ConfigError(f"links.{key} must be non-negative")
        if ln.pcie_batch_max < 1:
            raise ConfigError("links.pcie_batch_max must be >= 1")
        return self

    def to_dict(self) -> dict:
        return {
            "sim": {
                "duration_s": self.sim.duration_s,
                "seed": self.sim.seed,
                "cores": self.sim.cores,
            },
            "streams": {
                "load": {
                    "rate_pps": self.load.rate_pps,
                    "size": self.load.size,
                    "mix": [list(pair) for pair in self.load.mix],
                    "flows": self.load.flows,
                },
                "measuring": {
                    "enabled": self.measuring.enabled,
                    "rate_pps": self.measuring.rate_pps,
                    "size": self.measuring.size,
                },
            },
            "nf": {
                "pipeline": list(self.nf.pipeline),
                "service_ns": dict(self.nf.service_ns),
            },
            "slicing": {
                "mode": self.slicing.mode,
                "fraction": self.slicing.fraction,
                "bytes": self.slicing.bytes,
                "threshold": self.slicing.threshold,
                "n_entries": self.slicing.n_entries,
                "ttl_init": self.slicing.ttl_init,
                "hardware_latency": self.slicing.hardware_latency,
                "hardware_ns": self.slicing.hardware_ns,
            },
            "links": {
                "nic_gbps": self.links.nic_gbps,
                "wire_base_ns": self.links.wire_base_ns,
                "pcie_gbps": self.links.pcie_gbps,
                "pcie_base_ns": self.links.pcie_base_ns,
                "pcie_batch_max": self.links.pcie_batch_max,
                "pcie_batch_overhead_ns": self.links.pcie_batch_overhead_ns,
                "ddio": self.links.ddio,
                "mem_gbps": self.links.mem_gbps,
                "mem_base_ns": self.links.mem_base_ns,
            },
        }


def _take(table: dict, spec: dict[str, type | tuple], where: str) -> dict:
    """Pull and type-check known keys; reject anything else."""
    out = {}
    for key, value in table.items():
        if key not in spec:
            raise ConfigError(f"unknown key {where}.{key}")
    for key, want in spec.items():
        if key not in table:
            continue
        value = table[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if want is int and isinstance(value, bool):
            raise ConfigError(f"{where}.{key} must be {want.__name__}")
        if isinstance(want, type) and not isinstance(value, want):
            raise ConfigError(
                f"{where}.{key} must be {want.__name__}, got {type(value).__name__}")
        out[key] = value
    return out


def from_dict(data: dict) -> SimConfig:
    """Build and validate a config from parsed TOML."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    for section in data:
        if section not in ("sim", "streams", "nf", "slicing", "links"):
            raise ConfigError(f"unknown section [{section}]")

    cfg = SimConfig()

    sim = _take(data.get("sim", {}), {
        "duration_s": float, "seed": int, "cores": int}, "sim")
    for key, value in sim.items():
        setattr(cfg.sim, key, value)

    streams = data.get("streams", {})
    if not isinstance(streams, dict):
        raise ConfigError("[streams] must be a table")
    for sub in streams:
        if sub not in ("load", "measuring"):
            raise ConfigError(f"unknown stream [streams.{sub}]")
    load = _take(streams.get("load", {}), {
        "rate_pps": float, "size": int, "mix": list, "flows": int},
        "streams.load")
    if "mix" in load:
        mix = []
        for row in load["mix"]:
            if (not isinstance(row, list) or len(row) != 2
                    or not isinstance(row[0], int)
                    or not isinstance(row[1], (int, float))):
                raise ConfigError(
                    "streams.load.mix rows must be [size, weight] pairs")
            mix.append((row[0], float(row[1])))
        load["mix"] = mix
    for key, value in load.items():
        setattr(cfg.load, key, value)

    measuring = _take(streams.get("measuring", {}), {
        "enabled": bool, "rate_pps": float, "size": int}, "streams.measuring")
    for key, value in measuring.items():
        setattr(cfg.measuring, key, value)

    nf_table = dict(data.get("nf", {}))
    service = nf_table.pop("service_ns", {})
    nf = _take(nf_table, {"pipeline": list}, "nf")
    if "pipeline" in nf:
        if not all(isinstance(x, str) for x in nf["pipeline"]):
            raise ConfigError("nf.pipeline must be a list of names")
        cfg.nf.pipeline = list(nf["pipeline"])
    if not isinstance(service, dict):
        raise ConfigError("nf.service_ns must be a table")
    for name, ns in service.items():
        if not isinstance(ns, int) or isinstance(ns, bool):
            raise ConfigError(f"nf.service_ns.{name} must be an int")
        cfg.nf.service_ns[name] = ns

    slicing = _take(data.get("slicing", {}), {
        "mode": str, "fraction": float, "bytes": int, "threshold": int,
        "n_entries": int, "ttl_init": int, "hardware_latency": bool,
        "hardware_ns": float}, "slicing")
    for key, value in slicing.items():
        setattr(cfg.slicing, key, value)

    links = _take(data.get("links", {}), {
        "nic_gbps": float, "wire_base_ns": int, "pcie_gbps": float,
        "pcie_base_ns": int, "pcie_batch_max": int,
        "pcie_batch_overhead_ns": int, "ddio": bool, "mem_gbps": float,
        "mem_base_ns": int}, "links")
    for key, value in links.items():
        setattr(cfg.links, key, value)

    return cfg.validate()


def load_config(path: str) -> SimConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    return from_dict(data)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dump_toml(cfg: SimConfig) -> str:
    """Serialise every effective value; loading the dump round-trips."""
    data = cfg.to_dict()
    lines: list[str] = []

    def emit(name: str, table: dict) -> None:
        lines.append(f"[{name}]")
        for key, value in table.items():
            if isinstance(value, dict):
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
        for key, value in table.items():
            if isinstance(value, dict):
                emit(f"{name}.{key}", value)

    for section, table in data.items():
        emit(section, table)
    return "\n".join(lines)


def apply_overrides(cfg: SimConfig, overrides: list[str]) -> SimConfig:
    """Apply ``section.key=value`` strings on top of a config.

    Values parse as TOML (so ``7e6``, ``true``, ``[[64, 1]]`` all work);
    anything that does not parse is taken as a bare string.
    """
    data = cfg.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        path, _, raw = item.partition("=")
        keys = [k.strip() for k in path.strip().split(".")]
        if not all(keys):
            raise ConfigError(f"bad override path: {item!r}")
        raw = raw.strip()
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        node = data
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                raise ConfigError(f"unknown config table {'.'.join(keys[:-1])!r}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"unknown config key {path.strip()!r}")
        if keys == ["streams", "load", "mix"]:
            if not isinstance(value, list):
                raise ConfigError("streams.load.mix override must be a list")
        node[keys[-1]] = value
    return from_dict(data)
