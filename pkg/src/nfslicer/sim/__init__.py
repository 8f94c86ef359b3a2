"""Deterministic discrete-time model of the client-NIC-core round trip."""

from .config import SimConfig, ConfigError, load_config, dump_toml, apply_overrides
from .runner import run, sweep, pcie_traffic, SWEEP_AXES
from .report import SimReport, report_csv_rows, CSV_COLUMNS

__all__ = [
    "SimConfig",
    "ConfigError",
    "load_config",
    "dump_toml",
    "apply_overrides",
    "run",
    "sweep",
    "pcie_traffic",
    "SWEEP_AXES",
    "SimReport",
    "report_csv_rows",
    "CSV_COLUMNS",
]
