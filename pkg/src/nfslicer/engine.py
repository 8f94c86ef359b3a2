"""Slice and splice engine: the on-NIC payload and metadata tables.

Ingress slicing stashes the payload of any frame at or above the size
threshold into a fixed-size table slot picked by a FIFO cursor, and
forwards a minimum-size header packet carrying a token (slot index +
table generation).  Egress splicing validates the token against the
slot's current generation and TTL, restores the payload byte-exactly,
and frees the slot.

Slot lifecycle: a slot is busy while its TTL is positive.  Every time
the cursor lands on a busy slot the TTL drops by one and that packet is
forwarded unsliced, so an abandoned payload is reclaimed after a fixed
number of cursor wrap-arounds.  The generation counter survives both
reclamation and reuse, which is what lets a late token be recognised as
stale instead of silently matching a newer payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .packet import (
    MAX_PAYLOAD_BYTES,
    SLICED_DSCP,
    Packet,
    SliceToken,
    generation_mask,
    index_bits,
    mark_sliced,
    restore_payload,
    wire_size,
)

# Outcome reasons.
BELOW_THRESHOLD = "below-threshold"
TABLE_OCCUPIED = "table-occupied"
DSCP_COLLISION = "dscp-collision"
EMPTY_SLICE = "empty-slice"
OVERSIZE_PAYLOAD = "oversize-payload"
NOT_SLICED = "not-sliced"
STALE_GENERATION = "stale-generation"
MISSING_TOKEN = "missing-token"
INVALID_TOKEN = "invalid-token"


@dataclass
class EngineConfig:
    """Geometry and policy of one table shard."""

    n_entries: int = 256
    threshold: int = 500
    ttl_init: int = 10
    max_payload: int = MAX_PAYLOAD_BYTES
    # None slices the whole payload; an int slices that many trailing
    # bytes and leaves the head on the packet.
    slice_bytes: int | None = None

    def __post_init__(self) -> None:
        if self.n_entries < 2 or self.n_entries & (self.n_entries - 1):
            raise ValueError(f"n_entries must be a power of two >= 2: {self.n_entries}")
        if self.threshold < 1:
            raise ValueError("threshold must be positive")
        if self.ttl_init < 1:
            raise ValueError("ttl_init must be positive")
        if self.max_payload < 1 or self.max_payload > MAX_PAYLOAD_BYTES:
            raise ValueError(f"max_payload out of range: {self.max_payload}")
        if self.slice_bytes is not None and self.slice_bytes < 0:
            raise ValueError("slice_bytes must be non-negative")


@dataclass
class PayloadEntry:
    """One payload-table slot: the stashed bytes plus original DSCP."""

    size: int = 0
    dscp: int = 0
    data: bytes = b""


@dataclass
class MetadataEntry:
    """One metadata-table slot: generation counter and residency TTL."""

    generation: int = 0
    ttl: int = 0


@dataclass(frozen=True)
class Sliced:
    """Payload stashed; packet shrunk to its tokenised form."""

    packet: Packet


@dataclass(frozen=True)
class Passthrough:
    """Packet forwarded untouched."""

    packet: Packet
    reason: str


@dataclass(frozen=True)
class Reconstructed:
    """Payload and DSCP restored from the table."""

    packet: Packet


@dataclass(frozen=True)
class Dropped:
    """Sliced packet whose payload is no longer retrievable."""

    packet: Packet
    reason: str


SliceOutcome = Sliced | Passthrough
SpliceOutcome = Reconstructed | Passthrough | Dropped


class SliceTables:
    """Payload + metadata tables of a single shard, with FIFO cursor."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        n = self.config.n_entries
        self.payloads = [PayloadEntry() for _ in range(n)]
        self.metadata = [MetadataEntry() for _ in range(n)]
        self.cursor = 0
        self._gen_mask = generation_mask(n)
        self.counters = {
            "slices": 0,
            "splices": 0,
            "passthrough_below_threshold": 0,
            "passthrough_table_occupied": 0,
            "passthrough_dscp_collision": 0,
            "passthrough_empty_slice": 0,
            "passthrough_oversize_payload": 0,
            "passthrough_not_sliced": 0,
            "drops_stale_generation": 0,
            "drops_missing_token": 0,
            "drops_invalid_token": 0,
        }

    def _split_payload(self, payload: bytes) -> tuple[bytes, bytes]:
        """Head kept on the packet, tail stashed in the table."""
        k = self.config.slice_bytes
        if k is None or k >= len(payload):
            return b"", payload
        return payload[: len(payload) - k], payload[len(payload) - k :]

    def slice(self, packet: Packet) -> SliceOutcome:
        """Ingress step: stash the payload if the frame qualifies.

        Below-threshold frames, frames already carrying the sliced DSCP
        codepoint (which would be unrecoverable downstream), and empty
        or oversize slices pass through without touching the table.  A
        busy cursor slot costs that slot one TTL tick and the packet
        still passes through unsliced, even when the tick frees it.
        """
        cfg = self.config
        if wire_size(packet) < cfg.threshold:
            self.counters["passthrough_below_threshold"] += 1
            return Passthrough(packet, BELOW_THRESHOLD)
        if packet.dscp == SLICED_DSCP or packet.token is not None:
            self.counters["passthrough_dscp_collision"] += 1
            return Passthrough(packet, DSCP_COLLISION)
        head, tail = self._split_payload(packet.payload)
        if not tail:
            self.counters["passthrough_empty_slice"] += 1
            return Passthrough(packet, EMPTY_SLICE)
        if len(tail) > cfg.max_payload:
            self.counters["passthrough_oversize_payload"] += 1
            return Passthrough(packet, OVERSIZE_PAYLOAD)

        idx = self.cursor
        meta = self.metadata[idx]
        if meta.ttl > 0:
            meta.ttl -= 1
            self.cursor = (idx + 1) % cfg.n_entries
            self.counters["passthrough_table_occupied"] += 1
            return Passthrough(packet, TABLE_OCCUPIED)

        meta.generation += 1
        meta.ttl = cfg.ttl_init
        slot = self.payloads[idx]
        slot.size = len(tail)
        slot.dscp = packet.dscp
        slot.data = tail
        token = SliceToken(idx, meta.generation & self._gen_mask)
        self.cursor = (idx + 1) % cfg.n_entries
        self.counters["slices"] += 1
        return Sliced(mark_sliced(packet, token, head))

    def splice(self, packet: Packet) -> SpliceOutcome:
        """Egress step: restore the payload referenced by the token.

        Non-sliced packets pass through.  A sliced packet whose slot
        generation no longer matches (or whose slot already aged out)
        is dropped; its payload is gone.  A sliced-DSCP packet with no
        token is also dropped, since nothing restorable backs it.
        """
        if packet.dscp != SLICED_DSCP:
            self.counters["passthrough_not_sliced"] += 1
            return Passthrough(packet, NOT_SLICED)
        token = packet.token
        if token is None:
            self.counters["drops_missing_token"] += 1
            return Dropped(packet, MISSING_TOKEN)
        if not 0 <= token.payload_index < self.config.n_entries:
            self.counters["drops_invalid_token"] += 1
            return Dropped(packet, INVALID_TOKEN)

        meta = self.metadata[token.payload_index]
        mask = self._gen_mask
        if meta.ttl > 0 and (meta.generation & mask) == (token.generation & mask):
            slot = self.payloads[token.payload_index]
            restored = restore_payload(packet, slot.data, slot.dscp)
            meta.ttl = 0
            self.counters["splices"] += 1
            return Reconstructed(restored)
        self.counters["drops_stale_generation"] += 1
        return Dropped(packet, STALE_GENERATION)

    def occupancy(self) -> tuple[int, int]:
        """(busy slots, payload bytes currently stashed)."""
        used = 0
        used_bytes = 0
        for meta, slot in zip(self.metadata, self.payloads):
            if meta.ttl > 0:
                used += 1
                used_bytes += slot.size
        return used, used_bytes

    def stats(self) -> dict[str, int]:
        """Flat counter snapshot plus current occupancy."""
        used, used_bytes = self.occupancy()
        snap = dict(self.counters)
        snap["n_entries"] = self.config.n_entries
        snap["entries_used"] = used
        snap["bytes_used"] = used_bytes
        return snap


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def shard_for(packet: Packet, n_shards: int) -> int:
    """Pick the table shard for a packet's flow.

    Hashes the two (address, port) endpoints in sorted order plus the
    protocol, so both directions of a flow land on the same shard.
    """
    if n_shards < 1:
        raise ValueError("n_shards must be positive")
    a = (packet.ip_src, packet.l4_src_port)
    b = (packet.ip_dst, packet.l4_dst_port)
    lo, hi = (a, b) if a <= b else (b, a)
    data = struct.pack(">IHIHB", lo[0], lo[1], hi[0], hi[1], packet.protocol)
    return _fnv1a64(data) % n_shards


@dataclass
class ShardedEngine:
    """A bank of independent table shards with flow-hash dispatch."""

    n_shards: int = 1
    config: EngineConfig = field(default_factory=EngineConfig)
    shards: list[SliceTables] = field(init=False)

    def __post_init__(self) -> None:
        if self.n_shards < 1:
            raise ValueError("n_shards must be positive")
        self.shards = [SliceTables(self.config) for _ in range(self.n_shards)]

    def shard_of(self, packet: Packet) -> int:
        return shard_for(packet, self.n_shards)

    def ingress(self, packet: Packet) -> SliceOutcome:
        return self.shards[self.shard_of(packet)].slice(packet)

    def egress(self, packet: Packet, shard: int | None = None) -> SpliceOutcome:
        """Splice on the given shard, defaulting to the flow-hash one.

        Callers that rewrite addresses between ingress and egress must
        pass the ingress shard explicitly, mirroring hardware where the
        shard is pinned to the receive queue rather than re-hashed.
        """
        if shard is None:
            shard = self.shard_of(packet)
        return self.shards[shard].splice(packet)

    def occupancy(self) -> tuple[int, int]:
        used = 0
        used_bytes = 0
        for s in self.shards:
            u, b = s.occupancy()
            used += u
            used_bytes += b
        return used, used_bytes

    def stats(self) -> dict[str, int]:
        """Counters summed over shards, occupancy included."""
        merged: dict[str, int] = {}
        for s in self.shards:
            for key, value in s.stats().items():
                merged[key] = merged.get(key, 0) + value
        merged["n_shards"] = self.n_shards
        return merged
