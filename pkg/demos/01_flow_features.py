#!/usr/bin/env python3
"""Packets in, flow features out.

Builds a small capture by hand (a TCP burst, an echo exchange), aggregates
it into per-flow feature vectors, and prints the CSV the analyzers consume.
"""

import io

from netsentry import PacketRecord, Protocol, TimeWindow, extract_flows, export_csv

window = TimeWindow(0, 2_000_000)  # two seconds

packets = []
# A->B: 12 SYN packets over one second.
for k in range(12):
    packets.append(PacketRecord(
        at_us=k * 1_000_000 // 11, src="10.0.0.1", dst="10.0.0.2",
        protocol=Protocol.TCP, src_port=20000, dst_port=80,
        length_bytes=512, tcp_flags=frozenset({"SYN"}),
    ))
# B answers twice.
for k in range(2):
    packets.append(PacketRecord(
        at_us=500_000 + k * 400_000, src="10.0.0.2", dst="10.0.0.1",
        protocol=Protocol.TCP, src_port=80, dst_port=20000,
        length_bytes=128, tcp_flags=frozenset({"SYN", "ACK"}),
    ))
packets.sort(key=lambda p: p.at_us)

flows = extract_flows(packets, window)
print(f"{len(packets)} packets -> {len(flows)} directed flows\n")
for f in flows:
    print(f"  {f.key.src} -> {f.key.dst} ({f.key.protocol.value}): "
          f"{f.packet_count} pkts, {f.pps:.1f} pps, "
          f"syn={f.syn_count}, synack={f.synack_count}, "
          f"mean_iat={f.mean_iat_ms:.1f} ms")

print("\nCSV form (what gets exported and fed into prompts):\n")
sink = io.StringIO()
export_csv(flows, sink)
print(sink.getvalue())
