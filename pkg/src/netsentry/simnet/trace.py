"""
Event traces: in-memory form, the native binary format, and pcap export.

Native format: magic "NSTR", version u16, node-table (count u16, then
length-prefixed utf-8 addresses), then length-prefixed records of
(time_us u64 LE, node index u16, direction u8, packet tuple). A JSON
sidecar index (<file>.idx) carries per-node event counts and the time
range. The pcap export contains the delivered (rx) packets.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

from ..model import PacketRecord, Protocol, TCP_FLAG_NAMES, TelemetrySample
from ..pcap import pcap_bytes, read_pcap

NATIVE_MAGIC = b"NSTR"
NATIVE_VERSION = 1

_DIRECTIONS = ("tx", "rx", "drop")
_PROTO_CODES = {Protocol.TCP: 0, Protocol.UDP: 1, Protocol.ICMP: 2, Protocol.OTHER: 3}
_PROTO_BY_CODE = {v: k for k, v in _PROTO_CODES.items()}
_NO_PORT = 0xFFFF


class MalformedNativeTrace(Exception):
    pass


@dataclass
class LinkCounters:
    offered: int = 0
    delivered: int = 0
    dropped: int = 0
    delivered_bits: int = 0


@dataclass
class TraceEvent:
    time_us: int
    node: str
    direction: str  # tx | rx | drop
    record: PacketRecord
    seq: int = 0


@dataclass
class EventTrace:
    scenario: object
    events: list[TraceEvent]
    telemetry: dict[str, list[TelemetrySample]]
    link_counters: dict[tuple[str, str], LinkCounters] = field(default_factory=dict)

    def observed_by(self, address: str, start_us: int | None = None,
                    end_us: int | None = None) -> list[PacketRecord]:
        """Packets a node's capture would contain: its own tx plus its rx."""
        out = []
        for e in self.events:
            if e.node != address or e.direction == "drop":
                continue
            if start_us is not None and e.time_us < start_us:
                continue
            if end_us is not None and e.time_us > end_us:
                continue
            out.append(e.record)
        return out

    def delivered_records(self) -> list[PacketRecord]:
        return [e.record for e in self.events if e.direction == "rx"]


# ---------------------------------------------------------------------------
# Binary IO
# ---------------------------------------------------------------------------

def trace_to_bytes(trace: EventTrace) -> bytes:
    nodes = sorted({e.node for e in trace.events}
                   | {e.record.src for e in trace.events}
                   | {e.record.dst for e in trace.events})
    index = {address: i for i, address in enumerate(nodes)}

    out = [NATIVE_MAGIC, struct.pack("<HH", NATIVE_VERSION, len(nodes))]
    for address in nodes:
        encoded = address.encode()
        out.append(struct.pack("<B", len(encoded)))
        out.append(encoded)

    for e in trace.events:
        r = e.record
        flags = 0
        if r.tcp_flags is not None:
            for bit, name in enumerate(TCP_FLAG_NAMES):
                if name in r.tcp_flags:
                    flags |= 1 << bit
        body = struct.pack(
            "<QHBHHBHHIB",
            e.time_us, index[e.node], _DIRECTIONS.index(e.direction),
            index[r.src], index[r.dst], _PROTO_CODES[r.protocol],
            r.src_port if r.src_port is not None else _NO_PORT,
            r.dst_port if r.dst_port is not None else _NO_PORT,
            r.length_bytes, flags,
        )
        out.append(struct.pack("<H", len(body)))
        out.append(body)
    return b"".join(out)


def write_trace(trace: EventTrace, path: str | Path) -> None:
    path = Path(path)
    path.write_bytes(trace_to_bytes(trace))
    per_node: dict[str, dict[str, int]] = {}
    for e in trace.events:
        per_node.setdefault(e.node, {"tx": 0, "rx": 0, "drop": 0})[e.direction] += 1
    index = {
        "version": NATIVE_VERSION,
        "events_total": len(trace.events),
        "per_node": per_node,
        "time_range_us": [
            trace.events[0].time_us if trace.events else 0,
            trace.events[-1].time_us if trace.events else 0,
        ],
    }
    Path(str(path) + ".idx").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")


def read_native_trace(source: bytes | str | Path) -> list[TraceEvent]:
    data = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    if data[:4] != NATIVE_MAGIC:
        raise MalformedNativeTrace("bad magic")
    try:
        version, node_count = struct.unpack("<HH", data[4:8])
        if version != NATIVE_VERSION:
            raise MalformedNativeTrace(f"unsupported version {version}")
        offset = 8
        nodes = []
        for _ in range(node_count):
            (length,) = struct.unpack("<B", data[offset:offset + 1])
            offset += 1
            nodes.append(data[offset:offset + length].decode())
            offset += length
        events = []
        while offset < len(data):
            (record_len,) = struct.unpack("<H", data[offset:offset + 2])
            offset += 2
            body = data[offset:offset + record_len]
            if len(body) != record_len:
                raise MalformedNativeTrace(f"truncated record at offset {offset}")
            offset += record_len
            (time_us, node_idx, direction, src_idx, dst_idx, proto,
             src_port, dst_port, length_bytes, flag_bits) = struct.unpack("<QHBHHBHHIB", body)
            protocol = _PROTO_BY_CODE[proto]
            tcp_flags = None
            if protocol is Protocol.TCP:
                tcp_flags = frozenset(
                    name for bit, name in enumerate(TCP_FLAG_NAMES) if flag_bits & (1 << bit)
                )
            record = PacketRecord(
                at_us=time_us, src=nodes[src_idx], dst=nodes[dst_idx],
                protocol=protocol,
                src_port=None if src_port == _NO_PORT else src_port,
                dst_port=None if dst_port == _NO_PORT else dst_port,
                length_bytes=length_bytes, tcp_flags=tcp_flags,
            )
            events.append(TraceEvent(
                time_us=time_us, node=nodes[node_idx],
                direction=_DIRECTIONS[direction], record=record, seq=len(events),
            ))
    except (struct.error, IndexError, UnicodeDecodeError) as e:
        raise MalformedNativeTrace(str(e)) from e
    return events


def read_trace(source: bytes | str | Path):
    """Unified reader: classic pcap or the native trace format.

    Returns a TraceData (records plus skipped count) either way; native
    traces contribute their delivered (rx) packets and never skip frames.
    """
    from ..pcap import TraceData

    data = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    if data[:4] == NATIVE_MAGIC:
        events = read_native_trace(data)
        records = [e.record for e in events if e.direction == "rx"]
        records.sort(key=lambda r: r.at_us)
        return TraceData(records=records, skipped=0)
    return read_pcap(data)


def export_pcap(trace: EventTrace, path: str | Path) -> int:
    """Write the delivered packets as a classic pcap; returns packet count."""
    records = sorted(trace.delivered_records(), key=lambda r: r.at_us)
    Path(path).write_bytes(pcap_bytes(records))
    return len(records)

