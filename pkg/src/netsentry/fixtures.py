"""
Deterministic synthetic traffic fixtures.

make_benign_records() builds an ordinary-looking 25-second office mix:
a handful of short TCP sessions (handshake, a little data, teardown), DNS
lookups, and periodic pings. Exactly 422 packets, and every flow sits far
inside the benign side of the rule thresholds.
"""

from __future__ import annotations

from pathlib import Path

from .model import PacketRecord, Protocol
from .pcap import pcap_bytes

BENIGN_PACKET_COUNT = 422

_CLIENTS = ["10.1.0.2", "10.1.0.3", "10.1.0.4"]
_WEB = "10.1.0.10"
_DNS = "10.1.0.11"
_GATEWAY = "10.1.0.1"


def _tcp(at_us, src, dst, sport, dport, flags, length=120) -> PacketRecord:
    return PacketRecord(at_us=at_us, src=src, dst=dst, protocol=Protocol.TCP,
                        src_port=sport, dst_port=dport, length_bytes=length,
                        tcp_flags=frozenset(flags))


def _udp(at_us, src, dst, sport, dport, length=90) -> PacketRecord:
    return PacketRecord(at_us=at_us, src=src, dst=dst, protocol=Protocol.UDP,
                        src_port=sport, dst_port=dport, length_bytes=length)


def _icmp(at_us, src, dst, length=84) -> PacketRecord:
    return PacketRecord(at_us=at_us, src=src, dst=dst, protocol=Protocol.ICMP,
                        src_port=None, dst_port=None, length_bytes=length)


def _tcp_session(start_us, client, sport, server=_WEB, dport=443, exchanges=5):
    """SYN / SYN-ACK / ACK, `exchanges` request-response pairs, FIN both ways."""
    t = start_us
    step = 40_000
    packets = [
        _tcp(t, client, server, sport, dport, {"SYN"}, 74),
        _tcp(t + step, server, client, dport, sport, {"SYN", "ACK"}, 74),
        _tcp(t + 2 * step, client, server, sport, dport, {"ACK"}, 66),
    ]
    t += 3 * step
    for i in range(exchanges):
        packets.append(_tcp(t, client, server, sport, dport, {"ACK", "PSH"}, 320))
        packets.append(_tcp(t + step, server, client, dport, sport, {"ACK"}, 1180))
        t += 2 * step
    packets.append(_tcp(t, client, server, sport, dport, {"FIN", "ACK"}, 66))
    packets.append(_tcp(t + step, server, client, dport, sport, {"FIN", "ACK"}, 66))
    return packets


def make_benign_records() -> list[PacketRecord]:
    packets: list[PacketRecord] = []

    # 24 web sessions of 15 packets each, staggered across clients: 360.
    for i in range(24):
        client = _CLIENTS[i % len(_CLIENTS)]
        start = 200_000 + i * 1_000_000
        packets.extend(_tcp_session(start, client, 40_000 + i, exchanges=5))

    # 18 DNS lookups (query + response): 36.
    for i in range(18):
        client = _CLIENTS[i % len(_CLIENTS)]
        t = 150_000 + i * 1_350_000
        packets.append(_udp(t, client, _DNS, 53_000 + i, 53, 78))
        packets.append(_udp(t + 25_000, _DNS, client, 53, 53_000 + i, 134))

    # 13 echo request/reply pairs to the gateway: 26.
    for i in range(13):
        t = 500_000 + i * 1_900_000
        packets.append(_icmp(t, _CLIENTS[0], _GATEWAY))
        packets.append(_icmp(t + 12_000, _GATEWAY, _CLIENTS[0]))

    packets.sort(key=lambda r: (r.at_us, r.src, r.dst))
    assert len(packets) == BENIGN_PACKET_COUNT
    return packets


def make_benign_pcap_bytes() -> bytes:
    return pcap_bytes(make_benign_records())


def write_benign_pcap(path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(make_benign_pcap_bytes())
    return path


def bundled_benign_pcap() -> Path:
    """Path of the packaged 422-packet benign capture."""
    return Path(__file__).parent / "data" / "benign422.pcap"
