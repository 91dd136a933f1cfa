"""Rule classifier behavior and oracle re-evaluation."""

from __future__ import annotations

import random

from conftest import random_record_set
from netsentry.flows import extract_flows
from netsentry.model import (
    Analyzer,
    FlowFeatures,
    FlowKey,
    Protocol,
    ThreatCategory,
    TimeWindow,
)
from netsentry.rules import RuleThresholds, classify_rules
from oracles import naive_rule_category

WINDOW = TimeWindow(0, 1_000_000)


def flow(src="192.168.1.1", dst="192.168.1.4", protocol=Protocol.TCP,
         packets=100, pps=100.0, syn=None, synack=0, ports=1) -> FlowFeatures:
    syn = packets if syn is None and protocol is Protocol.TCP else (syn or 0)
    return FlowFeatures(
        key=FlowKey(src, dst, protocol), window=WINDOW,
        packet_count=packets, byte_count=packets * 512,
        pps=pps, bps=pps * 512 * 8,
        syn_count=syn, synack_count=synack, distinct_dst_ports=ports,
        mean_iat_ms=10.0, stddev_iat_ms=1.0,
    )


class TestClassifyRules:
    def test_empty_flows_benign(self):
        v = classify_rules([], RuleThresholds())
        assert v.category is ThreatCategory.BENIGN
        assert v.confidence == 1.0
        assert v.evidence == []
        assert v.analyzer is Analyzer.RULE

    def test_victim_side_flood_flow(self):
        # The inbound flood flow a victim observes: ~610 pps, all SYNs.
        v = classify_rules([flow(packets=3050, pps=610.0, syn=3050)])
        assert v.category is ThreatCategory.DOS_TCP_FLOOD
        assert v.evidence and "pps" in v.evidence[0]

    def test_port_scan_rule(self):
        v = classify_rules([flow(packets=50, pps=5.0, syn=50, ports=50)])
        assert v.category is ThreatCategory.PORT_SCAN

    def test_udp_flood_rule(self):
        v = classify_rules([flow(protocol=Protocol.UDP, packets=500, pps=500.0, syn=0)])
        assert v.category is ThreatCategory.DOS_UDP_FLOOD

    def test_low_syn_ratio_not_tcp_flood(self):
        v = classify_rules([flow(packets=1000, pps=1000.0, syn=100)])
        assert v.category is not ThreatCategory.DOS_TCP_FLOOD

    def test_threshold_sharpness(self):
        t = RuleThresholds()
        fired = classify_rules([flow(packets=200, pps=t.flood_pps_min)], t)
        below = classify_rules([flow(packets=199, pps=t.flood_pps_min - 0.001)], t)
        assert fired.category is ThreatCategory.DOS_TCP_FLOOD
        assert below.category is not ThreatCategory.DOS_TCP_FLOOD

    def test_flood_outranks_scan(self):
        flows = [
            flow(packets=50, pps=5.0, syn=50, ports=50),
            flow(src="192.168.1.2", packets=3000, pps=600.0, syn=3000),
        ]
        assert classify_rules(flows).category is ThreatCategory.DOS_TCP_FLOOD

    def test_permutation_invariance(self):
        flows = [
            flow(packets=50, pps=5.0, syn=50, ports=50),
            flow(src="192.168.1.2", packets=3000, pps=600.0),
            flow(src="192.168.1.3", protocol=Protocol.UDP, packets=10, pps=10.9, syn=0),
        ]
        rng = random.Random(3)
        base = classify_rules(flows)
        for _ in range(10):
            shuffled = flows[:]
            rng.shuffle(shuffled)
            v = classify_rules(shuffled)
            assert v.category == base.category
            assert v.confidence == base.confidence

    def test_confidence_in_range(self):
        for f in (flow(packets=200, pps=200.0), flow(packets=9999, pps=99999.0)):
            v = classify_rules([f])
            assert 0.0 <= v.confidence <= 1.0

    def test_oracle_equivalence_on_random_flows(self):
        t = RuleThresholds()
        for seed in range(60):
            records, window = random_record_set(seed * 13 + 1)
            flows = extract_flows(records, window)
            assert classify_rules(flows, t).category == naive_rule_category(flows, t)

    def test_oracle_equivalence_on_crafted_flows(self):
        t = RuleThresholds()
        rng = random.Random(42)
        for _ in range(120):
            flows = []
            for _ in range(rng.randint(0, 5)):
                protocol = rng.choice([Protocol.TCP, Protocol.UDP, Protocol.ICMP])
                packets = rng.randint(1, 5000)
                flows.append(flow(
                    src=f"10.0.0.{rng.randint(1, 9)}",
                    dst=f"10.0.1.{rng.randint(1, 9)}",
                    protocol=protocol,
                    packets=packets,
                    pps=rng.uniform(0.1, 800.0),
                    syn=rng.randint(0, packets) if protocol is Protocol.TCP else 0,
                    ports=rng.randint(1, min(packets, 80)) if protocol is not Protocol.ICMP else 0,
                ))
            assert classify_rules(flows, t).category == naive_rule_category(flows, t)
