"""Payload slice-and-splice offload: protocol engine, path simulator,
and table sizing models."""

from .packet import (
    HEADER_BYTES,
    MAX_PAYLOAD_BYTES,
    MAX_WIRE_BYTES,
    MIN_WIRE_BYTES,
    SLICED_DSCP,
    TOKEN_BYTES,
    InvalidTokenError,
    NFSlicerError,
    Packet,
    ProtocolViolationError,
    SliceToken,
    decode_token,
    encode_token,
    mark_sliced,
    restore_payload,
    wire_size,
    wire_size_of,
)
from .engine import (
    EngineConfig,
    ShardedEngine,
    SliceTables,
    Sliced,
    Passthrough,
    Reconstructed,
    Dropped,
    shard_for,
)
from .nf import (
    Chain,
    Firewall,
    FirewallRule,
    L2Forwarder,
    MeterState,
    Nat,
    NatState,
    NfVerdict,
    QosMeter,
)
from . import sizing
from .histogram import LatencyHistogram
from .sim import SimConfig, SimReport, run, sweep, pcie_traffic

__version__ = "0.1.0"
