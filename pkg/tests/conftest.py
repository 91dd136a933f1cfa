from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netsentry.model import (
    Analyzer,
    NodeId,
    PacketRecord,
    Protocol,
    ThreatCategory,
    TimeWindow,
    TriggerDecision,
    Verdict,
)

ADDRESS_POOL = [f"192.168.1.{i}" for i in range(1, 9)] + ["10.0.0.1", "10.0.0.2"]


def random_record(rng: random.Random, window: TimeWindow) -> PacketRecord:
    protocol = rng.choice([Protocol.TCP, Protocol.UDP, Protocol.ICMP, Protocol.OTHER])
    src, dst = rng.sample(ADDRESS_POOL, 2)
    ported = protocol in (Protocol.TCP, Protocol.UDP)
    flags = None
    if protocol is Protocol.TCP:
        flags = frozenset(rng.sample(["SYN", "ACK", "FIN", "RST", "PSH", "URG"],
                                     rng.randint(0, 3)))
    return PacketRecord(
        at_us=rng.randint(window.start_us, window.end_us),
        src=src, dst=dst, protocol=protocol,
        src_port=rng.randint(0, 65535) if ported else None,
        dst_port=rng.randint(0, 65535) if ported else None,
        length_bytes=rng.randint(40, 1500),
        tcp_flags=flags,
    )


def random_record_set(seed: int, max_packets: int = 200) -> tuple[list[PacketRecord], TimeWindow]:
    rng = random.Random(seed)
    window = TimeWindow(start_us=0, end_us=rng.randint(1, 30) * 1_000_000)
    n = rng.randint(0, max_packets)
    records = sorted((random_record(rng, window) for _ in range(n)), key=lambda r: r.at_us)
    return records, window


@pytest.fixture
def node() -> NodeId:
    return NodeId(address="192.168.1.4", agent_id="agent-4")


def make_verdict(category=ThreatCategory.BENIGN, confidence=1.0, evidence=None,
                 analyzer=Analyzer.RULE) -> Verdict:
    if evidence is None:
        evidence = [] if category is ThreatCategory.BENIGN else [f"synthetic evidence for {category.value}"]
    return Verdict(category=category, confidence=confidence, evidence=evidence, analyzer=analyzer)


def make_trigger(fired=True, observed=600.0, threshold=200.0) -> TriggerDecision:
    from netsentry.model import Metric
    if fired:
        return TriggerDecision(fired=True, breached_metric=Metric.LATENCY,
                               observed=observed, threshold=threshold)
    return TriggerDecision(fired=False, breached_metric=None, observed=0.0, threshold=0.0)
