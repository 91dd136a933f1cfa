"""
Deterministic discrete-event network engine.

Links are pairs of directed channels with propagation delay, serialization
at the configured bandwidth, a FIFO tail-drop queue, and optional i.i.d.
loss drawn from per-channel splittable generators. All arithmetic is in
integer microseconds, so a given spec produces a bit-identical event trace
on every platform and run.

Observation model: a node records tx for packets it originates (at emission,
before any queueing or drop — a host capture sees its own sends), rx for
packets delivered to it, and each channel counts drops. Forwarding through
hubs is silent.
"""

from __future__ import annotations

import heapq
import statistics
from collections import deque
from dataclasses import dataclass, field

from ..model import NodeId, PacketRecord, Protocol, TelemetrySample
from .rand import SplitRng
from .scenario import ScenarioSpec, SpecError, TrafficFlowSpec
from .trace import EventTrace, LinkCounters, TraceEvent

# Event ordering at equal timestamps: phase switches settle first, then
# queue slots free, then deliveries, then new emissions, then telemetry.
_PRIO_PHASE = 0
_PRIO_SVC = 1
_PRIO_DELIVER = 2
_PRIO_EMIT = 3
_PRIO_TICK = 4

TELEMETRY_TICK_S = 1.0


@dataclass
class _Packet:
    src: str
    dst: str
    protocol: Protocol
    src_port: int | None
    dst_port: int | None
    length_bytes: int
    tcp_flags: frozenset[str] | None = None
    echo_reply: bool = False

    def record(self, at_us: int) -> PacketRecord:
        return PacketRecord(
            at_us=at_us, src=self.src, dst=self.dst, protocol=self.protocol,
            src_port=self.src_port, dst_port=self.dst_port,
            length_bytes=self.length_bytes, tcp_flags=self.tcp_flags,
        )


@dataclass
class _Channel:
    upstream: str
    downstream: str
    delay_us: int
    bandwidth_bps: int
    loss_pct: float
    queue_packets: int
    rng: SplitRng
    line_free_us: int = 0
    queued: int = 0
    counters: LinkCounters = field(default_factory=LinkCounters)

    def serialization_us(self, length_bytes: int) -> int:
        return -(-length_bytes * 8 * 1_000_000 // self.bandwidth_bps)  # ceil

    def queue_delay_ms(self, now_us: int) -> float:
        return max(0, self.line_free_us - now_us) / 1000.0

    def apply(self, delay_ms: float, bandwidth_kbps: float, loss_pct: float,
              queue_packets: int) -> None:
        self.delay_us = round(delay_ms * 1000)
        self.bandwidth_bps = max(round(bandwidth_kbps * 1000), 1)
        self.loss_pct = loss_pct
        self.queue_packets = queue_packets


def _gap_emissions(start_us: int, stop_us: int, packet_bytes: int, rate_kbps: float) -> list[int]:
    """Emission times for a constant-rate stream, closed-form integer gaps."""
    rate_bps = max(round(rate_kbps * 1000), 1)
    numerator = packet_bytes * 8 * 1_000_000
    times = []
    k = 0
    while True:
        t = start_us + k * numerator // rate_bps
        if t >= stop_us:
            break
        times.append(t)
        k += 1
    return times


class Engine:
    def __init__(self, spec: ScenarioSpec):
        spec.validate()
        self.spec = spec
        self.root_rng = SplitRng(spec.seed)
        self.now_us = 0
        self._seq = 0
        self._heap: list = []

        self.agent_addresses = spec.addresses()
        self._nodes = {p.node.address: p.node for p in spec.nodes}

        self.channels: dict[tuple[str, str], _Channel] = {}
        neighbors: dict[str, list[str]] = {}
        for link in spec.links:
            for u, v in ((link.a, link.b), (link.b, link.a)):
                self.channels[(u, v)] = _Channel(
                    upstream=u, downstream=v,
                    delay_us=round(link.delay_ms * 1000),
                    bandwidth_bps=max(round(link.bandwidth_kbps * 1000), 1),
                    loss_pct=link.loss_pct,
                    queue_packets=link.queue_packets,
                    rng=self.root_rng.split(f"loss:{u}->{v}"),
                )
                neighbors.setdefault(u, []).append(v)
        self._next_hop = _routing_table(neighbors)

        self.events: list[TraceEvent] = []
        self.telemetry: dict[str, list[TelemetrySample]] = {a: [] for a in self.agent_addresses}
        self._latency_history: dict[str, deque] = {a: deque(maxlen=5) for a in self.agent_addresses}
        self._tick_snapshots: dict[str, tuple[int, int, int]] = {}

    # -- scheduling -----------------------------------------------------------

    def _push(self, t_us: int, priority: int, action, *args) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t_us, priority, self._seq, action, args))

    def run(self) -> EventTrace:
        self._schedule_phases()
        self._schedule_traffic()
        self._schedule_ticks()

        while self._heap:
            t_us, _prio, _seq, action, args = heapq.heappop(self._heap)
            self.now_us = t_us
            action(t_us, *args)

        self.events.sort(key=lambda e: (e.time_us, e.seq))
        return EventTrace(
            scenario=self.spec,
            events=self.events,
            telemetry=self.telemetry,
            link_counters={key: ch.counters for key, ch in self.channels.items()},
        )

    def _schedule_phases(self) -> None:
        for phase in self.spec.phases:
            self._push(round(phase.start_s * 1e6), _PRIO_PHASE, self._apply_phase, phase)

    def _apply_phase(self, _t_us: int, phase) -> None:
        for link in phase.links:
            for u, v in ((link.a, link.b), (link.b, link.a)):
                self.channels[(u, v)].apply(
                    link.delay_ms, link.bandwidth_kbps, link.loss_pct, link.queue_packets
                )

    def _schedule_ticks(self) -> None:
        tick_us = round(TELEMETRY_TICK_S * 1e6)
        duration_us = round(self.spec.duration_s * 1e6)
        t = 0
        while t <= duration_us:
            self._push(t, _PRIO_TICK, self._telemetry_tick)
            t += tick_us

    def _schedule_traffic(self) -> None:
        for index, flow in enumerate(self.spec.traffic):
            start_us = round(flow.start_s * 1e6)
            stop_us = round(flow.stop_s * 1e6)
            if flow.kind == "tcp_flood":
                for s in range(flow.streams):
                    dst = flow.dsts[s % len(flow.dsts)]
                    packet = dict(src=flow.src, dst=dst, protocol=Protocol.TCP,
                                  src_port=20000 + s, dst_port=80,
                                  length_bytes=flow.packet_bytes,
                                  tcp_flags=frozenset({"SYN"}))
                    for t in _gap_emissions(start_us, stop_us, flow.packet_bytes, flow.rate_kbps):
                        self._push(t, _PRIO_EMIT, self._emit, _Packet(**packet))
            elif flow.kind == "benign_background":
                for s in range(flow.streams):
                    dst = flow.dsts[s % len(flow.dsts)]
                    packet = dict(src=flow.src, dst=dst, protocol=Protocol.UDP,
                                  src_port=40000 + s, dst_port=9,
                                  length_bytes=flow.packet_bytes)
                    for t in _gap_emissions(start_us, stop_us, flow.packet_bytes, flow.rate_kbps):
                        self._push(t, _PRIO_EMIT, self._emit, _Packet(**packet))
            elif flow.kind == "udp_echo":
                dst = flow.dsts[0]
                for t in _gap_emissions(start_us, stop_us, flow.packet_bytes, flow.rate_kbps):
                    self._push(t, _PRIO_EMIT, self._emit, _Packet(
                        src=flow.src, dst=dst, protocol=Protocol.UDP,
                        src_port=50000 + index, dst_port=7,
                        length_bytes=flow.packet_bytes, echo_reply=True,
                    ))
            elif flow.kind == "port_scan":
                dst = flow.dsts[0]
                ports = list(range(1, flow.ports_to_scan + 1))
                rng = self.root_rng.split(f"scan:{flow.src}:{index}")
                for i in range(len(ports) - 1, 0, -1):  # Fisher-Yates
                    j = rng.randint(0, i)
                    ports[i], ports[j] = ports[j], ports[i]
                span = stop_us - start_us
                for k, port in enumerate(ports):
                    t = start_us + k * span // len(ports)
                    self._push(t, _PRIO_EMIT, self._emit, _Packet(
                        src=flow.src, dst=dst, protocol=Protocol.TCP,
                        src_port=45000, dst_port=port,
                        length_bytes=flow.packet_bytes,
                        tcp_flags=frozenset({"SYN"}),
                    ))
            else:
                raise SpecError(f"unknown traffic kind {flow.kind!r}")

    # -- packet path ----------------------------------------------------------

    def _record_event(self, t_us: int, node: str, direction: str, packet: _Packet) -> None:
        self.events.append(TraceEvent(
            time_us=t_us, node=node, direction=direction,
            record=packet.record(t_us), seq=len(self.events),
        ))

    def _emit(self, t_us: int, packet: _Packet) -> None:
        self._record_event(t_us, packet.src, "tx", packet)
        self._offer(t_us, packet, packet.src)

    def _offer(self, t_us: int, packet: _Packet, at: str) -> None:
        hop = self._next_hop.get(at, {}).get(packet.dst)
        if hop is None:
            return  # unroutable: swallowed, like a host with no route
        channel = self.channels[(at, hop)]
        channel.counters.offered += 1
        if channel.queued >= channel.queue_packets:
            channel.counters.dropped += 1
            self._record_event(t_us, at, "drop", packet)
            return
        channel.queued += 1
        start = max(t_us, channel.line_free_us)
        finish = start + channel.serialization_us(packet.length_bytes)
        channel.line_free_us = finish
        self._push(finish, _PRIO_SVC, self._serialized, packet, channel, hop)

    def _serialized(self, t_us: int, packet: _Packet, channel: _Channel, hop: str) -> None:
        channel.queued -= 1
        if channel.loss_pct > 0 and channel.rng.chance(channel.loss_pct / 100.0):
            channel.counters.dropped += 1
            self._record_event(t_us, channel.upstream, "drop", packet)
            return
        channel.counters.delivered += 1
        channel.counters.delivered_bits += packet.length_bytes * 8
        self._push(t_us + channel.delay_us, _PRIO_DELIVER, self._arrive, packet, hop)

    def _arrive(self, t_us: int, packet: _Packet, at: str) -> None:
        if at != packet.dst:
            self._offer(t_us, packet, at)  # silent store-and-forward
            return
        self._record_event(t_us, at, "rx", packet)
        if packet.echo_reply:
            response = _Packet(
                src=packet.dst, dst=packet.src, protocol=packet.protocol,
                src_port=packet.dst_port, dst_port=packet.src_port,
                length_bytes=packet.length_bytes, echo_reply=False,
            )
            self._push(t_us, _PRIO_EMIT, self._emit, response)

    # -- telemetry --------------------------------------------------------------

    def _attached(self, address: str) -> list[tuple[_Channel, _Channel]]:
        pairs = []
        for (u, v), outbound in self.channels.items():
            if u == address:
                pairs.append((outbound, self.channels[(v, u)]))
        return pairs

    def _telemetry_tick(self, t_us: int) -> None:
        for address in self.agent_addresses:
            pairs = self._attached(address)
            if not pairs:
                continue
            latency = max(
                2 * (out.delay_us / 1000.0) + out.queue_delay_ms(t_us) + inbound.queue_delay_ms(t_us)
                for out, inbound in pairs
            )
            history = self._latency_history[address]
            jitter = statistics.pstdev(history) if len(history) >= 2 else 0.0
            history.append(latency)

            offered = delivered_bits = dropped = 0
            for out, inbound in pairs:
                for ch in (out, inbound):
                    offered += ch.counters.offered
                    dropped += ch.counters.dropped
                    delivered_bits += ch.counters.delivered_bits
            last_offered, last_dropped, last_bits = self._tick_snapshots.get(address, (0, 0, 0))
            d_offered = offered - last_offered
            d_dropped = dropped - last_dropped
            d_bits = delivered_bits - last_bits
            self._tick_snapshots[address] = (offered, dropped, delivered_bits)

            loss_pct = 100.0 * d_dropped / d_offered if d_offered else 0.0
            throughput_kbps = d_bits / TELEMETRY_TICK_S / 1000.0

            self.telemetry[address].append(TelemetrySample(
                node=self._nodes[address], at_us=t_us,
                latency_ms=latency, jitter_ms=jitter,
                packet_loss_pct=min(loss_pct, 100.0),
                throughput_kbps=throughput_kbps,
            ))


def run(spec: ScenarioSpec) -> EventTrace:
    """Execute a scenario to completion; identical spec, identical trace."""
    return Engine(spec).run()


def _routing_table(neighbors: dict[str, list[str]]) -> dict[str, dict[str, str]]:
    """BFS next-hop per (source, destination) over the undirected link graph."""
    table: dict[str, dict[str, str]] = {}
    for source in neighbors:
        hops: dict[str, str] = {}
        queue = deque([source])
        parent: dict[str, str] = {source: source}
        while queue:
            node = queue.popleft()
            for peer in neighbors.get(node, ()):
                if peer not in parent:
                    parent[peer] = node
                    queue.append(peer)
        for dst in parent:
            if dst == source:
                continue
            step = dst
            while parent[step] != source:
                step = parent[step]
            hops[dst] = step
        table[source] = hops
    return table
