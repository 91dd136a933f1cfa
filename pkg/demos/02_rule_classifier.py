#!/usr/bin/env python3
"""The deterministic rule classifier on three crafted windows.

A SYN flood, a port sweep, and ordinary chatter: the same thresholds the
embedded agents use (flood at 200 pps with 80% SYNs, scans at 20+ ports
with <=3 packets per port).
"""

from netsentry import FlowFeatures, FlowKey, Protocol, TimeWindow, classify_rules

WINDOW = TimeWindow(0, 5_000_000)


def flow(src, dst, protocol, packets, pps, syn=0, ports=1):
    return FlowFeatures(
        key=FlowKey(src, dst, protocol), window=WINDOW,
        packet_count=packets, byte_count=packets * 512,
        pps=pps, bps=pps * 512 * 8, syn_count=syn, synack_count=0,
        distinct_dst_ports=ports, mean_iat_ms=1000 / max(pps, 0.001),
        stddev_iat_ms=0.5,
    )


cases = {
    "SYN flood hitting a sink": [
        flow("192.168.1.1", "192.168.1.4", Protocol.TCP, 3050, 610.0, syn=3050),
    ],
    "port sweep": [
        flow("10.0.0.9", "10.0.0.20", Protocol.TCP, 60, 12.0, syn=60, ports=60),
    ],
    "ordinary chatter": [
        flow("10.0.0.2", "10.0.0.10", Protocol.TCP, 64, 2.7, syn=8),
        flow("10.0.0.2", "10.0.0.11", Protocol.UDP, 6, 0.3),
    ],
}

for label, flows in cases.items():
    verdict = classify_rules(flows)
    print(f"{label}:")
    print(f"  -> {verdict.category.value} (confidence {verdict.confidence:.2f})")
    for line in verdict.evidence:
        print(f"     evidence: {line}")
    print()
