"""
Flow aggregation: packet records -> per-flow feature vectors -> CSV.

Flows are keyed by (src, dst, protocol) without ports; port dispersion is
captured by distinct_dst_ports so scans stay visible inside one flow.
"""

from __future__ import annotations

import math
from typing import IO

from .model import FlowFeatures, FlowKey, PacketRecord, TimeWindow

# Guard against zero-length windows (1 microsecond).
MIN_WINDOW_S = 1e-6

CSV_COLUMNS = (
    "src", "dst", "protocol", "window_start_us", "window_end_us",
    "packet_count", "byte_count", "pps", "bps", "syn_count", "synack_count",
    "distinct_dst_ports", "mean_iat_ms", "stddev_iat_ms",
)


class SinkError(Exception):
    pass


def extract_flows(records: list[PacketRecord], window: TimeWindow) -> list[FlowFeatures]:
    """Aggregate in-window records into one FlowFeatures per flow key.

    Records outside [window.start_us, window.end_us] are ignored.
    Inter-arrival stats run over consecutive in-flow packets; single-packet
    flows use the window length as mean_iat with zero stddev.
    Output is sorted by pps descending, then key, for stable ordering.
    """
    window_s = max(window.length_s(), MIN_WINDOW_S)
    grouped: dict[FlowKey, list[PacketRecord]] = {}
    for r in records:
        if not window.contains(r.at_us):
            continue
        key = FlowKey(src=r.src, dst=r.dst, protocol=r.protocol)
        grouped.setdefault(key, []).append(r)

    flows = []
    for key, pkts in grouped.items():
        pkts.sort(key=lambda r: r.at_us)
        count = len(pkts)
        byte_count = sum(r.length_bytes for r in pkts)
        syn_count = sum(1 for r in pkts if r.tcp_flags and "SYN" in r.tcp_flags and "ACK" not in r.tcp_flags)
        synack_count = sum(1 for r in pkts if r.tcp_flags and "SYN" in r.tcp_flags and "ACK" in r.tcp_flags)
        ports = {r.dst_port for r in pkts if r.dst_port is not None}

        if count >= 2:
            iats_ms = [(b.at_us - a.at_us) / 1000.0 for a, b in zip(pkts, pkts[1:])]
            mean_iat = sum(iats_ms) / len(iats_ms)
            var = sum((x - mean_iat) ** 2 for x in iats_ms) / len(iats_ms)
            stddev_iat = math.sqrt(var)
        else:
            mean_iat = window_s * 1000.0
            stddev_iat = 0.0

        flows.append(FlowFeatures(
            key=key,
            window=window,
            packet_count=count,
            byte_count=byte_count,
            pps=count / window_s,
            bps=byte_count * 8 / window_s,
            syn_count=syn_count,
            synack_count=synack_count,
            distinct_dst_ports=len(ports),
            mean_iat_ms=mean_iat,
            stddev_iat_ms=stddev_iat,
        ))

    flows.sort(key=lambda f: (-f.pps, f.key.src, f.key.dst, f.key.protocol.value))
    return flows


def _fmt(value: float) -> str:
    return format(value, ".6g")


def export_csv(flows: list[FlowFeatures], out: IO[str]) -> int:
    """Write flows as CSV (fixed column order, 6 significant digits).

    Returns the number of data rows written; the header is always written.
    """
    try:
        out.write(",".join(CSV_COLUMNS) + "\n")
        for f in flows:
            row = (
                f.key.src, f.key.dst, f.key.protocol.value,
                str(f.window.start_us), str(f.window.end_us),
                str(f.packet_count), str(f.byte_count),
                _fmt(f.pps), _fmt(f.bps),
                str(f.syn_count), str(f.synack_count),
                str(f.distinct_dst_ports),
                _fmt(f.mean_iat_ms), _fmt(f.stddev_iat_ms),
            )
            out.write(",".join(row) + "\n")
    except OSError as e:
        raise SinkError(str(e)) from e
    return len(flows)
