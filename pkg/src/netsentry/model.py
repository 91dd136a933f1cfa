"""
Shared domain types for the netsentry framework.

All timestamps are integer microseconds since a per-run epoch (simulation
start for simulated runs, the Unix epoch for live runs). Identifiers and
enumerations always serialize as strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


def is_ipv4(address: str) -> bool:
    parts = address.split(".")
    if len(parts) != 4:
        return False
    for p in parts:
        if not p.isdigit() or (len(p) > 1 and p[0] == "0") or int(p) > 255:
            return False
    return True


class ThreatCategory(str, Enum):
    BENIGN = "benign"
    DOS_TCP_FLOOD = "dos_tcp_flood"
    DOS_UDP_FLOOD = "dos_udp_flood"
    PORT_SCAN = "port_scan"
    RECON_DISTRIBUTED = "recon_distributed"
    UNKNOWN_ANOMALY = "unknown_anomaly"


# Higher value = more severe. Both flood categories share the top rank.
CATEGORY_SEVERITY = {
    ThreatCategory.BENIGN: 0,
    ThreatCategory.UNKNOWN_ANOMALY: 1,
    ThreatCategory.PORT_SCAN: 2,
    ThreatCategory.RECON_DISTRIBUTED: 2,
    ThreatCategory.DOS_TCP_FLOOD: 3,
    ThreatCategory.DOS_UDP_FLOOD: 3,
}


class Protocol(str, Enum):
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"
    OTHER = "other"


class Analyzer(str, Enum):
    RULE = "rule"
    LLM = "llm"


class Metric(str, Enum):
    LATENCY = "latency"
    JITTER = "jitter"
    LOSS = "loss"


class Role(str, Enum):
    ATTACKER = "attacker"
    VICTIM = "victim"
    SCANNER = "scanner"
    NORMAL = "normal"


class Urgency(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class HealthStatus(str, Enum):
    HEALTHY = "healthy"
    DELAYED = "delayed"
    MISSING = "missing"


@dataclass(frozen=True)
class NodeId:
    """A monitored node: its IPv4 address plus the agent instance on it."""

    address: str
    agent_id: str

    def __post_init__(self) -> None:
        if not is_ipv4(self.address):
            raise ValueError(f"not a valid IPv4 address: {self.address!r}")
        if not self.agent_id:
            raise ValueError("agent_id must be non-empty")


@dataclass(frozen=True)
class TimeWindow:
    start_us: int
    end_us: int

    def __post_init__(self) -> None:
        if self.end_us < self.start_us:
            raise ValueError(f"window end {self.end_us} before start {self.start_us}")

    def length_s(self) -> float:
        return (self.end_us - self.start_us) / 1e6

    def contains(self, at_us: int) -> bool:
        return self.start_us <= at_us <= self.end_us


@dataclass
class Verdict:
    """One analyzer's conclusion about one capture window.

    evidence holds machine-checkable feature statements; it must be
    non-empty for any category other than benign.
    """

    category: ThreatCategory
    confidence: float
    evidence: list[str]
    analyzer: Analyzer
    model_id: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")
        if self.category is not ThreatCategory.BENIGN and not self.evidence:
            raise ValueError(f"{self.category.value} verdict requires evidence")


# ---------------------------------------------------------------------------
# Telemetry
# ---------------------------------------------------------------------------

# Latency recorded when a live probe target is unreachable.
SENTINEL_LATENCY_MS = 10_000.0


@dataclass
class TelemetrySample:
    node: NodeId
    at_us: int
    latency_ms: float
    jitter_ms: float
    packet_loss_pct: float
    throughput_kbps: float

    def __post_init__(self) -> None:
        for name in ("latency_ms", "jitter_ms", "packet_loss_pct", "throughput_kbps"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.packet_loss_pct > 100:
            raise ValueError(f"packet_loss_pct must be <= 100, got {self.packet_loss_pct}")


@dataclass
class ThresholdPolicy:
    latency_ms_max: float = 200.0
    jitter_ms_max: float = 50.0
    packet_loss_pct_max: float = 5.0
    sample_interval_s: float = 2.0
    cooldown_s: float = 30.0

    def __post_init__(self) -> None:
        for name in ("latency_ms_max", "jitter_ms_max", "packet_loss_pct_max",
                     "sample_interval_s", "cooldown_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class CaptureParams:
    duration_s: float = 25.0
    max_packets: int = 100_000

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.max_packets <= 0:
            raise ValueError("max_packets must be > 0")


@dataclass
class CaptureBounds:
    minimum: CaptureParams = field(default_factory=lambda: CaptureParams(duration_s=5.0))
    maximum: CaptureParams = field(default_factory=lambda: CaptureParams(duration_s=100.0))


@dataclass
class TriggerDecision:
    fired: bool
    breached_metric: Metric | None
    observed: float
    threshold: float

    def __post_init__(self) -> None:
        if self.fired != (self.breached_metric is not None):
            raise ValueError("fired must hold exactly when breached_metric is present")


# ---------------------------------------------------------------------------
# Packets and flows
# ---------------------------------------------------------------------------

TCP_FLAG_NAMES = ("SYN", "ACK", "FIN", "RST", "PSH", "URG")


@dataclass(frozen=True)
class PacketRecord:
    at_us: int
    src: str
    dst: str
    protocol: Protocol
    src_port: int | None
    dst_port: int | None
    length_bytes: int
    tcp_flags: frozenset[str] | None = None

    def __post_init__(self) -> None:
        ported = self.protocol in (Protocol.TCP, Protocol.UDP)
        if ported != (self.src_port is not None) or ported != (self.dst_port is not None):
            raise ValueError(f"ports must be present iff protocol is tcp/udp ({self.protocol.value})")
        if (self.protocol is Protocol.TCP) != (self.tcp_flags is not None):
            raise ValueError("tcp_flags must be present iff protocol is tcp")
        if self.length_bytes < 0:
            raise ValueError("length_bytes must be >= 0")
        for port in (self.src_port, self.dst_port):
            if port is not None and not 0 <= port <= 65535:
                raise ValueError(f"port out of range: {port}")


@dataclass(frozen=True)
class FlowKey:
    """Direction-sensitive flow identity: (src, dst, protocol), no ports."""

    src: str
    dst: str
    protocol: Protocol


@dataclass
class FlowFeatures:
    key: FlowKey
    window: TimeWindow
    packet_count: int
    byte_count: int
    pps: float
    bps: float
    syn_count: int
    synack_count: int
    distinct_dst_ports: int
    mean_iat_ms: float
    stddev_iat_ms: float


# ---------------------------------------------------------------------------
# Agent-side reporting
# ---------------------------------------------------------------------------

@dataclass
class ThreatReport:
    """One agent's structured verdict for one capture window.

    top_flows is a truncation (<= 20, by pps descending); packet_count is
    the full capture's in-window record count, not the flow-sum.
    """

    report_id: str
    node: NodeId
    window: TimeWindow
    trigger: TriggerDecision
    packet_count: int
    byte_count: int
    top_flows: list[FlowFeatures]
    verdict: Verdict
    summary_text: str
    created_at_us: int


@dataclass
class MemoryEntry:
    at_us: int
    category: ThreatCategory
    one_line: str


@dataclass
class Heartbeat:
    agent_id: str
    address: str
    at_us: int
    cycles_completed: int
    reports_sent: int
    queue_depth: int
    heartbeat_interval_s: float = 5.0
    sample: TelemetrySample | None = None


# ---------------------------------------------------------------------------
# Controller-side correlation
# ---------------------------------------------------------------------------

@dataclass
class PolicyRecommendation:
    """Advisory only; carries no executable command semantics."""

    advisory_actions: list[str]
    urgency: Urgency


@dataclass
class Incident:
    incident_id: str
    window: TimeWindow
    category: ThreatCategory
    confidence: float
    roles: dict[str, Role]
    supporting_reports: list[str]
    recommendation: PolicyRecommendation
    narrative: str

    def __post_init__(self) -> None:
        if not self.supporting_reports:
            raise ValueError("incident requires at least one supporting report")
        if all(r is Role.NORMAL for r in self.roles.values()):
            raise ValueError("incident requires at least one non-normal role")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


@dataclass
class AgentHealth:
    agent_id: str
    last_heartbeat_at_us: int
    status: HealthStatus


@dataclass
class Subtask:
    """Advisory message to an agent; agents may ignore it."""

    kind: str  # verify | observe | report
    target: str
    note: str
    advisory: bool = True
