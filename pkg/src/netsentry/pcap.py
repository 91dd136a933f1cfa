"""
Classic pcap reading and writing, plus packet synthesis for exports.

Supports both byte orders and both the microsecond and nanosecond magic
variants, over Ethernet (linktype 1) and raw-IP (linktype 101) captures.
Non-IPv4 frames are skipped and counted, never fatal. pcapng is out of
scope; so is reassembly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from .model import PacketRecord, Protocol, TCP_FLAG_NAMES

MAGIC_US = 0xA1B2C3D4
MAGIC_US_SWAPPED = 0xD4C3B2A1
MAGIC_NS = 0xA1B23C4D
MAGIC_NS_SWAPPED = 0x4D3CB2A1

LINKTYPE_ETHERNET = 1
LINKTYPE_RAW_IP = 101

_GLOBAL_HEADER_LEN = 24
_RECORD_HEADER_LEN = 16

_TCP_FLAG_BITS = {"FIN": 0x01, "SYN": 0x02, "RST": 0x04, "PSH": 0x08, "ACK": 0x10, "URG": 0x20}


class MalformedTrace(Exception):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"offset {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class UnsupportedLinkType(Exception):
    def __init__(self, linktype: int):
        super().__init__(f"unsupported link type {linktype} (only Ethernet and raw IP)")
        self.linktype = linktype


@dataclass
class TraceData:
    records: list[PacketRecord]
    skipped: int


def read_pcap(source: bytes | str | Path) -> TraceData:
    """Parse a classic pcap capture into packet records sorted by timestamp."""
    data = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    if len(data) < _GLOBAL_HEADER_LEN:
        raise MalformedTrace(0, f"truncated global header ({len(data)} bytes)")

    magic = struct.unpack("<I", data[:4])[0]
    if magic == MAGIC_US:
        endian, ts_divisor = "<", 1
    elif magic == MAGIC_NS:
        endian, ts_divisor = "<", 1000
    elif magic == MAGIC_US_SWAPPED:
        endian, ts_divisor = ">", 1
    elif magic == MAGIC_NS_SWAPPED:
        endian, ts_divisor = ">", 1000
    else:
        raise MalformedTrace(0, f"bad magic 0x{magic:08X}")

    linktype = struct.unpack(endian + "I", data[20:24])[0]
    if linktype not in (LINKTYPE_ETHERNET, LINKTYPE_RAW_IP):
        raise UnsupportedLinkType(linktype)

    records: list[PacketRecord] = []
    skipped = 0
    offset = _GLOBAL_HEADER_LEN
    while offset < len(data):
        if offset + _RECORD_HEADER_LEN > len(data):
            raise MalformedTrace(offset, "truncated record header")
        ts_sec, ts_frac, incl_len, orig_len = struct.unpack(
            endian + "IIII", data[offset:offset + _RECORD_HEADER_LEN]
        )
        body_start = offset + _RECORD_HEADER_LEN
        if body_start + incl_len > len(data):
            raise MalformedTrace(offset, f"truncated record body (need {incl_len} bytes)")
        frame = data[body_start:body_start + incl_len]
        at_us = ts_sec * 1_000_000 + ts_frac // ts_divisor

        record = _decode_frame(frame, linktype, at_us, orig_len)
        if record is None:
            skipped += 1
        else:
            records.append(record)
        offset = body_start + incl_len

    records.sort(key=lambda r: r.at_us)
    return TraceData(records=records, skipped=skipped)


def _decode_frame(frame: bytes, linktype: int, at_us: int, orig_len: int) -> PacketRecord | None:
    if linktype == LINKTYPE_ETHERNET:
        if len(frame) < 14:
            return None
        ethertype = struct.unpack("!H", frame[12:14])[0]
        if ethertype != 0x0800:
            return None
        ip = frame[14:]
    else:
        ip = frame

    if len(ip) < 20 or ip[0] >> 4 != 4:
        return None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        return None
    proto_num = ip[9]
    frag_offset = struct.unpack("!H", ip[6:8])[0] & 0x1FFF
    src = ".".join(str(b) for b in ip[12:16])
    dst = ".".join(str(b) for b in ip[16:20])
    payload = ip[ihl:]

    src_port = dst_port = None
    flags = None
    if frag_offset != 0:
        # Non-first fragment: transport header absent, treat as opaque.
        protocol = Protocol.OTHER
    elif proto_num == 6 and len(payload) >= 14:
        protocol = Protocol.TCP
        src_port, dst_port = struct.unpack("!HH", payload[0:4])
        flag_bits = payload[13]
        flags = frozenset(n for n, bit in _TCP_FLAG_BITS.items() if flag_bits & bit)
    elif proto_num == 17 and len(payload) >= 8:
        protocol = Protocol.UDP
        src_port, dst_port = struct.unpack("!HH", payload[0:4])
    elif proto_num == 1:
        protocol = Protocol.ICMP
    else:
        protocol = Protocol.OTHER

    return PacketRecord(
        at_us=at_us, src=src, dst=dst, protocol=protocol,
        src_port=src_port, dst_port=dst_port,
        length_bytes=orig_len, tcp_flags=flags,
    )


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------

def _mac_for(address: str) -> bytes:
    octets = [int(p) for p in address.split(".")]
    return bytes([0x02, 0x00] + octets)


def _ip_checksum(header: bytes) -> int:
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) + header[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def build_frame(record: PacketRecord) -> bytes:
    """Synthesize an Ethernet frame for a packet record.

    The frame is padded (or its payload truncated) so the frame length
    equals record.length_bytes, keeping byte counts stable through a
    write/read round trip. Minimum sizes: 54 (tcp), 42 (udp), 42 (icmp).
    """
    eth = _mac_for(record.dst) + _mac_for(record.src) + b"\x08\x00"

    if record.protocol is Protocol.TCP:
        flag_bits = 0
        for name in record.tcp_flags or ():
            flag_bits |= _TCP_FLAG_BITS[name]
        transport = struct.pack(
            "!HHIIBBHHH",
            record.src_port, record.dst_port, 1, 0, 5 << 4, flag_bits, 65535, 0, 0,
        )
        proto_num = 6
    elif record.protocol is Protocol.UDP:
        payload_len = max(record.length_bytes - 14 - 20 - 8, 0)
        transport = struct.pack("!HHHH", record.src_port, record.dst_port, 8 + payload_len, 0)
        proto_num = 17
    elif record.protocol is Protocol.ICMP:
        transport = struct.pack("!BBHHH", 8, 0, 0, 0, 0)
        proto_num = 1
    else:
        transport = b""
        proto_num = 253

    base_len = len(eth) + 20 + len(transport)
    pad = max(record.length_bytes - base_len, 0)
    total_ip_len = 20 + len(transport) + pad

    ip = struct.pack(
        "!BBHHHBBH4s4s",
        (4 << 4) | 5, 0, total_ip_len, 0, 0, 64, proto_num, 0,
        bytes(int(p) for p in record.src.split(".")),
        bytes(int(p) for p in record.dst.split(".")),
    )
    ip = ip[:10] + struct.pack("!H", _ip_checksum(ip)) + ip[12:]
    return eth + ip + transport + b"\x00" * pad


def write_pcap(records: list[PacketRecord], path: str | Path) -> None:
    Path(path).write_bytes(pcap_bytes(records))


def pcap_bytes(records: list[PacketRecord]) -> bytes:
    out = [struct.pack("<IHHiIII", MAGIC_US, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET)]
    for record in records:
        frame = build_frame(record)
        out.append(struct.pack(
            "<IIII",
            record.at_us // 1_000_000, record.at_us % 1_000_000,
            len(frame), max(len(frame), record.length_bytes),
        ))
        out.append(frame)
    return b"".join(out)
