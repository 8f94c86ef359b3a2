"""Packet value type, wire-size accounting, and the slice-token codec.

Packets here never leave the process, so headers stay structured fields
instead of serialized bytes.  The one bit-exact contract is the 64-bit
slice token: the low log2(n_entries) bits carry the payload-table index
and the remaining high bits carry the table generation counter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

# Header model: 14B Ethernet + 20B IPv4 + 8B UDP.
HEADER_BYTES = 42
# Token appended to a sliced packet's header.
TOKEN_BYTES = 8
# Per-frame overhead (preamble/FCS/gap) charged only when a payload is
# carried; min-size frames absorb it in the 64B floor.
FRAME_OVERHEAD_BYTES = 22
# Ethernet frame bounds.
MIN_WIRE_BYTES = 64
MAX_WIRE_BYTES = 1518
# Largest payload a single frame (and one payload-table entry) can hold.
MAX_PAYLOAD_BYTES = MAX_WIRE_BYTES - HEADER_BYTES - FRAME_OVERHEAD_BYTES
# DSCP codepoint marking a packet whose payload was sliced off.
SLICED_DSCP = 0b111111

TOKEN_BITS = 64

BROADCAST_MAC = 0xFFFFFFFFFFFF


class NFSlicerError(Exception):
    """Base class for protocol errors."""


class InvalidTokenError(NFSlicerError, ValueError):
    """Token cannot be encoded for the given table geometry."""


class ProtocolViolationError(NFSlicerError, RuntimeError):
    """Operation applied to a packet in the wrong protocol state."""


@dataclass(frozen=True)
class SliceToken:
    """Reference to a payload stashed in an on-NIC table."""

    payload_index: int
    generation: int


@dataclass(frozen=True)
class Packet:
    """One packet travelling the simulated path.

    MACs are 48-bit ints, IPv4 addresses 32-bit ints, ports 16-bit.
    ``payload`` holds application bytes only; headers are accounted for
    by :func:`wire_size`.
    """

    eth_src: int = 0
    eth_dst: int = 0
    eth_type: int = 0x0800
    ip_src: int = 0
    ip_dst: int = 0
    dscp: int = 0
    protocol: int = 17
    l4_src_port: int = 0
    l4_dst_port: int = 0
    payload: bytes = b""
    token: SliceToken | None = None
    ingress_ts: int = 0
    egress_ts: int = 0
    stream_id: str = "load"

    def __post_init__(self) -> None:
        if not 0 <= self.eth_src <= BROADCAST_MAC or not 0 <= self.eth_dst <= BROADCAST_MAC:
            raise ValueError("MAC addresses are 48-bit")
        if not 0 <= self.ip_src <= 0xFFFFFFFF or not 0 <= self.ip_dst <= 0xFFFFFFFF:
            raise ValueError("IPv4 addresses are 32-bit")
        if not 0 <= self.dscp <= 0b111111:
            raise ValueError("dscp is a 6-bit field")
        if not 0 <= self.protocol <= 0xFF:
            raise ValueError("protocol is an 8-bit field")
        if not 0 <= self.l4_src_port <= 0xFFFF or not 0 <= self.l4_dst_port <= 0xFFFF:
            raise ValueError("ports are 16-bit")
        if len(self.payload) > MAX_PAYLOAD_BYTES:
            raise ValueError(
                f"payload exceeds {MAX_PAYLOAD_BYTES} bytes: {len(self.payload)}"
            )


def index_bits(n_entries: int) -> int:
    """Bits of the token used for the payload-table index."""
    if n_entries < 2 or n_entries & (n_entries - 1):
        raise InvalidTokenError(f"n_entries must be a power of two >= 2: {n_entries}")
    return n_entries.bit_length() - 1


def generation_mask(n_entries: int) -> int:
    """Mask selecting the generation bits that fit in a token."""
    return (1 << (TOKEN_BITS - index_bits(n_entries))) - 1


def encode_token(token: SliceToken, n_entries: int) -> int:
    """Pack a token into its 64-bit wire word.

    The generation counter is truncated to the available high bits, so
    comparisons on the far side must use the same truncation.
    """
    bits = index_bits(n_entries)
    if not 0 <= token.payload_index < n_entries:
        raise InvalidTokenError(
            f"payload_index {token.payload_index} out of range for {n_entries} entries"
        )
    if token.generation < 0:
        raise InvalidTokenError("generation is unsigned")
    gen = token.generation & ((1 << (TOKEN_BITS - bits)) - 1)
    return (gen << bits) | token.payload_index


def decode_token(word: int, n_entries: int) -> SliceToken:
    """Unpack a 64-bit token word. Total: every word decodes."""
    bits = index_bits(n_entries)
    if not 0 <= word < (1 << TOKEN_BITS):
        raise InvalidTokenError(f"token word must fit in 64 bits: {word:#x}")
    return SliceToken(payload_index=word & ((1 << bits) - 1), generation=word >> bits)


def wire_size_of(payload_len: int, has_token: bool = False) -> int:
    """Frame size on the wire for a given payload length.

    Header bytes plus payload plus (when a payload is present) framing
    overhead, floored at the 64B minimum frame.  A full 1454B payload
    yields 1518B; a fully sliced packet (token, no payload) yields 64B.
    """
    if payload_len < 0:
        raise ValueError("payload_len must be non-negative")
    raw = HEADER_BYTES + payload_len
    if has_token:
        raw += TOKEN_BYTES
    if payload_len:
        raw += FRAME_OVERHEAD_BYTES
    return max(MIN_WIRE_BYTES, raw)


def wire_size(packet: Packet) -> int:
    """Frame size of ``packet`` on the wire."""
    return wire_size_of(len(packet.payload), packet.token is not None)


def mark_sliced(packet: Packet, token: SliceToken, remaining: bytes = b"") -> Packet:
    """Return the on-wire form of a packet whose payload was sliced off.

    ``remaining`` carries the leading payload bytes kept on the packet
    when only the tail was sliced; the default removes the payload
    entirely, shrinking the frame to the 64B minimum.
    """
    if packet.token is not None or packet.dscp == SLICED_DSCP:
        raise ProtocolViolationError("packet is already marked as sliced")
    return replace(packet, dscp=SLICED_DSCP, token=token, payload=remaining)


def restore_payload(packet: Packet, payload: bytes, dscp: int) -> Packet:
    """Inverse of :func:`mark_sliced`: reattach payload, drop the token.

    ``payload`` is the sliced-off tail, appended after any bytes the
    packet kept; ``dscp`` is the original codepoint from the table.
    """
    if packet.token is None:
        raise ProtocolViolationError("packet carries no token to splice")
    return replace(packet, dscp=dscp, token=None, payload=packet.payload + payload)


def ip_from_str(dotted: str) -> int:
    """Parse dotted-quad IPv4 text to its 32-bit value."""
    parts = dotted.split(".")
    if len(parts) != 4:
        raise ValueError(f"bad IPv4 address: {dotted!r}")
    value = 0
    for part in parts:
        octet = int(part)
        if not 0 <= octet <= 255:
            raise ValueError(f"bad IPv4 address: {dotted!r}")
        value = (value << 8) | octet
    return value


def ip_to_str(value: int) -> str:
    """Format a 32-bit IPv4 value as dotted-quad text."""
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def mac_from_str(text: str) -> int:
    """Parse colon-separated MAC text to its 48-bit value."""
    parts = text.split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address: {text!r}")
    value = 0
    for part in parts:
        byte = int(part, 16)
        if not 0 <= byte <= 255:
            raise ValueError(f"bad MAC address: {text!r}")
        value = (value << 8) | byte
    return value


def mac_to_str(value: int) -> str:
    """Format a 48-bit MAC value as colon-separated hex."""
    return ":".join(f"{(value >> shift) & 0xFF:02x}" for shift in (40, 32, 24, 16, 8, 0))
