"""
Deterministic rule classifier over flow features.

Thresholds are configuration, not code: the defaults below give the
bundled scenarios a wide margin but can be tightened per deployment.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    CATEGORY_SEVERITY,
    Analyzer,
    FlowFeatures,
    Protocol,
    ThreatCategory,
    Verdict,
)


@dataclass
class RuleThresholds:
    flood_pps_min: float = 200.0
    syn_ratio_min: float = 0.8
    udp_flood_pps_min: float = 200.0
    port_scan_distinct_ports_min: int = 20
    port_scan_max_pkts_per_port: float = 3.0

    def __post_init__(self) -> None:
        for name in ("flood_pps_min", "syn_ratio_min", "udp_flood_pps_min",
                     "port_scan_distinct_ports_min", "port_scan_max_pkts_per_port"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _flow_matches(flow: FlowFeatures, t: RuleThresholds) -> list[tuple[ThreatCategory, float, float, str]]:
    """All rule hits for one flow as (category, observed, threshold, evidence)."""
    hits = []
    label = f"{flow.key.src}->{flow.key.dst}/{flow.key.protocol.value}"
    syn_ratio = flow.syn_count / flow.packet_count if flow.packet_count else 0.0

    if flow.pps >= t.flood_pps_min and syn_ratio >= t.syn_ratio_min:
        hits.append((
            ThreatCategory.DOS_TCP_FLOOD, flow.pps, t.flood_pps_min,
            f"flow {label}: pps={flow.pps:.6g} >= {t.flood_pps_min:.6g} "
            f"and syn_ratio={syn_ratio:.3f} >= {t.syn_ratio_min:.3f}",
        ))
    if flow.key.protocol is Protocol.UDP and flow.pps >= t.udp_flood_pps_min:
        hits.append((
            ThreatCategory.DOS_UDP_FLOOD, flow.pps, t.udp_flood_pps_min,
            f"flow {label}: udp pps={flow.pps:.6g} >= {t.udp_flood_pps_min:.6g}",
        ))
    if (flow.distinct_dst_ports >= t.port_scan_distinct_ports_min
            and flow.packet_count / flow.distinct_dst_ports <= t.port_scan_max_pkts_per_port):
        hits.append((
            ThreatCategory.PORT_SCAN, float(flow.distinct_dst_ports),
            float(t.port_scan_distinct_ports_min),
            f"flow {label}: {flow.distinct_dst_ports} distinct dst ports >= "
            f"{t.port_scan_distinct_ports_min} at "
            f"{flow.packet_count / flow.distinct_dst_ports:.2f} pkts/port "
            f"<= {t.port_scan_max_pkts_per_port:.6g}",
        ))
    return hits


def classify_rules(flows: list[FlowFeatures], thresholds: RuleThresholds | None = None) -> Verdict:
    """Classify one capture window's flows.

    The window verdict is the highest-severity per-flow hit (ties resolved
    toward the flow with larger pps); no hits means benign with full
    confidence and no evidence.
    """
    t = thresholds or RuleThresholds()
    best: tuple[int, float, ThreatCategory, float, float, str] | None = None
    for flow in flows:
        for category, observed, threshold, evidence in _flow_matches(flow, t):
            ranked = (CATEGORY_SEVERITY[category], flow.pps, category, observed, threshold, evidence)
            if best is None or ranked[:2] > best[:2]:
                best = ranked

    if best is None:
        return Verdict(
            category=ThreatCategory.BENIGN, confidence=1.0,
            evidence=[], analyzer=Analyzer.RULE,
        )
    _, _, category, observed, threshold, evidence = best
    confidence = min(1.0, 0.5 + 0.5 * (observed / threshold))
    return Verdict(
        category=category, confidence=confidence,
        evidence=[evidence], analyzer=Analyzer.RULE,
    )
