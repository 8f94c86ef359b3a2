"""Shallow network functions: header-only packet processing.

Each function reads and rewrites headers but never the payload, which
is what makes payload offload transparent to them.  Every call returns
an :class:`NfVerdict` carrying the (possibly rewritten) packet and the
modelled per-packet service time in nanoseconds.

Default service times order the functions by how much header state
they touch: stateless forwarding is cheapest, per-flow NAT is dearest.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .packet import BROADCAST_MAC, Packet, wire_size

# Modelled single-core service cost per packet, in ns.
DEFAULT_SERVICE_NS = {
    "l2fwd": 40,
    "qos": 55,
    "firewall": 70,
    "nat": 90,
}

GREEN = "green"
YELLOW = "yellow"
RED = "red"

ALLOW = "allow"
DENY = "deny"


@dataclass(frozen=True)
class NfVerdict:
    """Result of one network function on one packet."""

    packet: Packet | None
    service_ns: int
    reason: str | None = None
    color: str | None = None

    @property
    def forwarded(self) -> bool:
        return self.packet is not None

    @property
    def dropped(self) -> bool:
        return self.packet is None


class L2Forwarder:
    """Destination-MAC lookup rewriting both Ethernet addresses.

    ``port_table`` maps a destination MAC to the (src, dst) pair for
    the next hop.  Unknown destinations flood: dst becomes broadcast.
    """

    name = "l2fwd"

    def __init__(self, port_table: dict[int, tuple[int, int]] | None = None,
                 service_ns: int = DEFAULT_SERVICE_NS["l2fwd"]):
        self.port_table = dict(port_table or {})
        self.service_ns = service_ns

    def __call__(self, packet: Packet, now_ns: int = 0) -> NfVerdict:
        entry = self.port_table.get(packet.eth_dst)
        if entry is None:
            out = replace(packet, eth_dst=BROADCAST_MAC)
        else:
            out = replace(packet, eth_src=entry[0], eth_dst=entry[1])
        return NfVerdict(out, self.service_ns)


@dataclass
class MeterState:
    """Single-rate three-color meter buckets (color-blind mode).

    ``cir`` is bytes per second; ``tc``/``te`` are the committed and
    excess buckets, refilled from the same rate with committed first.
    """

    cir: float
    cbs: int
    ebs: int
    tc: float = field(default=-1.0)
    te: float = field(default=-1.0)
    last_ns: int = 0

    def __post_init__(self) -> None:
        if self.cir <= 0 or self.cbs <= 0 or self.ebs < 0:
            raise ValueError("meter needs cir > 0, cbs > 0, ebs >= 0")
        if self.tc < 0:
            self.tc = float(self.cbs)
        if self.te < 0:
            self.te = float(self.ebs)


class QosMeter:
    """Single-rate three-color policer: green/yellow forward, red drops."""

    name = "qos"

    def __init__(self, state: MeterState,
                 service_ns: int = DEFAULT_SERVICE_NS["qos"]):
        self.state = state
        self.service_ns = service_ns

    def _refill(self, now_ns: int) -> None:
        st = self.state
        elapsed_ns = now_ns - st.last_ns
        if elapsed_ns <= 0:
            return
        st.last_ns = now_ns
        tokens = st.cir * elapsed_ns * 1e-9
        room = st.cbs - st.tc
        if tokens <= room:
            st.tc += tokens
            return
        st.tc = float(st.cbs)
        st.te = min(float(st.ebs), st.te + (tokens - room))

    def __call__(self, packet: Packet, now_ns: int = 0) -> NfVerdict:
        self._refill(now_ns)
        st = self.state
        size = wire_size(packet)
        if size <= st.tc:
            st.tc -= size
            return NfVerdict(packet, self.service_ns, color=GREEN)
        if size <= st.te:
            st.te -= size
            return NfVerdict(packet, self.service_ns, color=YELLOW)
        return NfVerdict(None, self.service_ns, reason="meter-red", color=RED)


@dataclass(frozen=True)
class FirewallRule:
    """One match rule; ``None`` fields are wildcards."""

    action: str
    priority: int = 0
    src_ip: int | None = None
    dst_ip: int | None = None
    src_port: int | None = None
    dst_port: int | None = None
    protocol: int | None = None

    def __post_init__(self) -> None:
        if self.action not in (ALLOW, DENY):
            raise ValueError(f"rule action must be allow or deny: {self.action!r}")

    def matches(self, packet: Packet) -> bool:
        return (
            (self.src_ip is None or self.src_ip == packet.ip_src)
            and (self.dst_ip is None or self.dst_ip == packet.ip_dst)
            and (self.src_port is None or self.src_port == packet.l4_src_port)
            and (self.dst_port is None or self.dst_port == packet.l4_dst_port)
            and (self.protocol is None or self.protocol == packet.protocol)
        )


class Firewall:
    """First-match stateless filter, highest priority first.

    Ties on priority resolve in insertion order.  Packets matching no
    rule take ``default_action``.
    """

    name = "firewall"

    def __init__(self, rules: list[FirewallRule] | None = None,
                 default_action: str = ALLOW,
                 service_ns: int = DEFAULT_SERVICE_NS["firewall"]):
        if default_action not in (ALLOW, DENY):
            raise ValueError(f"default_action must be allow or deny: {default_action!r}")
        rules = list(rules or [])
        order = sorted(range(len(rules)), key=lambda i: (-rules[i].priority, i))
        self.rules = [rules[i] for i in order]
        self.default_action = default_action
        self.service_ns = service_ns

    def __call__(self, packet: Packet, now_ns: int = 0) -> NfVerdict:
        action = self.default_action
        for rule in self.rules:
            if rule.matches(packet):
                action = rule.action
                break
        if action == ALLOW:
            return NfVerdict(packet, self.service_ns)
        return NfVerdict(None, self.service_ns, reason="firewall-deny")


@dataclass
class NatState:
    """Dynamic NAT bindings: internal flows share one external address.

    ``internal_net``/``internal_mask`` select the inside; flows from
    inside allocate an external port on first sight, flows from outside
    must match an existing binding or drop.  Idle bindings are
    reclaimed lazily when a lookup finds them expired.
    """

    external_ip: int
    internal_net: int
    internal_mask: int
    port_lo: int = 1024
    port_hi: int = 65535
    timeout_ns: int = 120_000_000_000
    next_port: int = field(init=False)
    outbound: dict[tuple, tuple[int, int]] = field(default_factory=dict)
    inbound: dict[tuple, tuple] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 < self.port_lo <= self.port_hi <= 0xFFFF:
            raise ValueError("bad NAT port range")
        self.next_port = self.port_lo
        self._free: list[int] = []

    def is_internal(self, ip: int) -> bool:
        return (ip & self.internal_mask) == (self.internal_net & self.internal_mask)

    def _alloc_port(self) -> int | None:
        if self._free:
            return self._free.pop()
        if self.next_port <= self.port_hi:
            port = self.next_port
            self.next_port += 1
            return port
        return None

    def _expire(self, key: tuple, now_ns: int) -> bool:
        """Reclaim the binding for ``key`` if idle too long."""
        port, last = self.outbound[key]
        if now_ns - last <= self.timeout_ns:
            return False
        del self.outbound[key]
        del self.inbound[(port, key[2], key[3], key[4])]
        self._free.append(port)
        return True

    def reclaim_expired(self, now_ns: int) -> int:
        """Sweep every binding; used when the pool runs dry."""
        reclaimed = 0
        for key in list(self.outbound):
            if self._expire(key, now_ns):
                reclaimed += 1
        return reclaimed


class Nat:
    """Source NAT for outbound flows, reverse translation for inbound."""

    name = "nat"

    def __init__(self, state: NatState,
                 service_ns: int = DEFAULT_SERVICE_NS["nat"]):
        self.state = state
        self.service_ns = service_ns

    def __call__(self, packet: Packet, now_ns: int = 0) -> NfVerdict:
        st = self.state
        if st.is_internal(packet.ip_src):
            key = (packet.ip_src, packet.l4_src_port,
                   packet.ip_dst, packet.l4_dst_port, packet.protocol)
            bound = st.outbound.get(key)
            if bound is not None and st._expire(key, now_ns):
                bound = None
            if bound is None:
                port = st._alloc_port()
                if port is None and st.reclaim_expired(now_ns):
                    port = st._alloc_port()
                if port is None:
                    return NfVerdict(None, self.service_ns, reason="nat-pool-exhausted")
                st.inbound[(port, packet.ip_dst, packet.l4_dst_port,
                            packet.protocol)] = key
            else:
                port = bound[0]
            st.outbound[key] = (port, now_ns)
            out = replace(packet, ip_src=st.external_ip, l4_src_port=port)
            return NfVerdict(out, self.service_ns)

        if packet.ip_dst == st.external_ip:
            rkey = (packet.l4_dst_port, packet.ip_src,
                    packet.l4_src_port, packet.protocol)
            key = st.inbound.get(rkey)
            if key is not None:
                if st._expire(key, now_ns):
                    key = None
                else:
                    st.outbound[key] = (packet.l4_dst_port, now_ns)
            if key is None:
                return NfVerdict(None, self.service_ns, reason="nat-no-binding")
            out = replace(packet, ip_dst=key[0], l4_dst_port=key[1])
            return NfVerdict(out, self.service_ns)

        return NfVerdict(None, self.service_ns, reason="nat-no-binding")


class Chain:
    """Run functions in order; the first drop short-circuits.

    Service time accumulates over every function that actually ran,
    the dropping one included.
    """

    name = "chain"

    def __init__(self, functions: list):
        if not functions:
            raise ValueError("chain needs at least one function")
        self.functions = list(functions)

    @property
    def service_ns(self) -> int:
        return sum(fn.service_ns for fn in self.functions)

    def __call__(self, packet: Packet, now_ns: int = 0) -> NfVerdict:
        total = 0
        current = packet
        for fn in self.functions:
            verdict = fn(current, now_ns)
            total += verdict.service_ns
            if verdict.dropped:
                return NfVerdict(None, total, reason=verdict.reason,
                                 color=verdict.color)
            current = verdict.packet
        return NfVerdict(current, total)
