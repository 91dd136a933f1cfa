"""
Scenario definitions for the simulator, plus the two built-in scenarios:

  ddos8    — eight nodes on a hub; node .1 floods .4 and .6 with ten
             parallel 512-byte TCP SYN streams at 500 kbps each during
             seconds 1..9 of a 10 s run, over background echo pairs.
  degraded — two nodes, one link, three phases: Baseline (20 ms / 100 Mbps),
             Degraded (600 ms delay, 1 Mbps both directions), Recovery.

Scenario files are plain JSON with the same field names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..model import NodeId, is_ipv4
from .rand import SplitRng

HUB_ADDRESS = "192.168.1.254"


class SpecError(ValueError):
    pass


class UnknownScenario(ValueError):
    pass


@dataclass
class NodePlacement:
    node: NodeId
    x: float = 0.0
    y: float = 0.0


@dataclass
class LinkSpec:
    a: str
    b: str
    delay_ms: float
    bandwidth_kbps: float
    loss_pct: float = 0.0
    queue_packets: int = 100


@dataclass
class PhaseSpec:
    name: str
    start_s: float
    end_s: float
    links: list[LinkSpec] = field(default_factory=list)


@dataclass
class TrafficFlowSpec:
    kind: str  # udp_echo | tcp_flood | port_scan | benign_background
    src: str
    dsts: list[str]
    start_s: float
    stop_s: float
    packet_bytes: int
    rate_kbps: float
    streams: int = 1
    ports_to_scan: int = 0


@dataclass
class ScenarioSpec:
    name: str
    duration_s: float
    nodes: list[NodePlacement]
    links: list[LinkSpec]
    traffic: list[TrafficFlowSpec]
    phases: list[PhaseSpec] = field(default_factory=list)
    hubs: list[str] = field(default_factory=list)
    seed: int = 0

    def addresses(self) -> list[str]:
        return [p.node.address for p in self.nodes]

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise SpecError("duration_s must be > 0")
        known = set(self.addresses()) | set(self.hubs)
        if len(known) != len(self.nodes) + len(self.hubs):
            raise SpecError("duplicate node or hub address")
        for link in self.links:
            for endpoint in (link.a, link.b):
                if endpoint not in known:
                    raise SpecError(f"link endpoint {endpoint} not among nodes or hubs")
            if link.bandwidth_kbps <= 0 or link.delay_ms < 0:
                raise SpecError(f"bad link parameters on {link.a}<->{link.b}")
            if not 0 <= link.loss_pct <= 100:
                raise SpecError(f"loss_pct out of range on {link.a}<->{link.b}")
            if link.queue_packets <= 0:
                raise SpecError(f"queue_packets must be positive on {link.a}<->{link.b}")
        for t in self.traffic:
            if not (t.start_s < t.stop_s <= self.duration_s):
                raise SpecError(f"traffic window [{t.start_s}, {t.stop_s}] invalid")
            if t.rate_kbps <= 0 or t.packet_bytes <= 0:
                raise SpecError("traffic rate and packet size must be positive")
            if t.kind not in ("udp_echo", "tcp_flood", "port_scan", "benign_background"):
                raise SpecError(f"unknown traffic kind {t.kind!r}")
            if t.src not in known or any(d not in known for d in t.dsts):
                raise SpecError(f"traffic endpoints unknown for {t.kind} from {t.src}")
            if t.kind == "port_scan" and t.ports_to_scan <= 0:
                raise SpecError("port_scan requires ports_to_scan > 0")
        # Phases must not overlap per link they override.
        spans: dict[tuple[str, str], list[tuple[float, float]]] = {}
        for phase in self.phases:
            if not (0 <= phase.start_s < phase.end_s <= self.duration_s):
                raise SpecError(f"phase {phase.name} window invalid")
            for link in phase.links:
                key = _norm_pair(link.a, link.b)
                for lo, hi in spans.get(key, ()):
                    if phase.start_s < hi and lo < phase.end_s:
                        raise SpecError(f"overlapping phases on link {key}")
                spans.setdefault(key, []).append((phase.start_s, phase.end_s))


def _norm_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


# ---------------------------------------------------------------------------
# Built-ins
# ---------------------------------------------------------------------------

def builtin_scenario(name: str, seed: int = 0) -> ScenarioSpec:
    if name == "ddos8":
        return _ddos8(seed)
    if name == "degraded":
        return _degraded(seed)
    raise UnknownScenario(name)


def _ddos8(seed: int) -> ScenarioSpec:
    rng = SplitRng(seed).split("positions")
    nodes = []
    for i in range(1, 9):
        nodes.append(NodePlacement(
            node=NodeId(address=f"192.168.1.{i}", agent_id=f"agent-{i}"),
            x=round(rng.uniform(0.0, 100.0), 2),
            y=round(rng.uniform(0.0, 100.0), 2),
        ))
    # Access links are heterogeneous so the flood congests both the
    # attacker's uplink and the victims' downlinks: that is what makes all
    # three principals observe the attack locally.
    bandwidth = {1: 4_000.0, 4: 1_500.0, 6: 1_500.0}
    links = [
        LinkSpec(a=f"192.168.1.{i}", b=HUB_ADDRESS, delay_ms=2.0,
                 bandwidth_kbps=bandwidth.get(i, 10_000.0), queue_packets=100)
        for i in range(1, 9)
    ]
    traffic = [
        TrafficFlowSpec(kind="tcp_flood", src="192.168.1.1",
                        dsts=["192.168.1.4", "192.168.1.6"],
                        start_s=1.0, stop_s=9.0, packet_bytes=512,
                        rate_kbps=500.0, streams=10),
        TrafficFlowSpec(kind="udp_echo", src="192.168.1.2", dsts=["192.168.1.3"],
                        start_s=0.0, stop_s=10.0, packet_bytes=128, rate_kbps=1.024),
        TrafficFlowSpec(kind="udp_echo", src="192.168.1.7", dsts=["192.168.1.8"],
                        start_s=0.0, stop_s=10.0, packet_bytes=128, rate_kbps=1.024),
    ]
    return ScenarioSpec(
        name="ddos8", duration_s=10.0, nodes=nodes, links=links,
        traffic=traffic, hubs=[HUB_ADDRESS], seed=seed,
    )


def _degraded(seed: int) -> ScenarioSpec:
    nodes = [
        NodePlacement(node=NodeId(address="10.0.0.1", agent_id="agent-1"), x=10.0, y=50.0),
        NodePlacement(node=NodeId(address="10.0.0.2", agent_id="agent-2"), x=90.0, y=50.0),
    ]
    base = dict(a="10.0.0.1", b="10.0.0.2", delay_ms=20.0, bandwidth_kbps=100_000.0)
    links = [LinkSpec(**base)]
    phases = [
        PhaseSpec(name="Baseline", start_s=0.0, end_s=30.0,
                  links=[LinkSpec(**base)]),
        PhaseSpec(name="Degraded", start_s=30.0, end_s=90.0,
                  links=[LinkSpec(a="10.0.0.1", b="10.0.0.2",
                                  delay_ms=600.0, bandwidth_kbps=1_000.0)]),
        PhaseSpec(name="Recovery", start_s=90.0, end_s=120.0,
                  links=[LinkSpec(**base)]),
    ]
    traffic = [
        TrafficFlowSpec(kind="udp_echo", src="10.0.0.1", dsts=["10.0.0.2"],
                        start_s=0.0, stop_s=120.0, packet_bytes=128, rate_kbps=1.024),
    ]
    return ScenarioSpec(
        name="degraded", duration_s=120.0, nodes=nodes, links=links,
        traffic=traffic, phases=phases, seed=seed,
    )


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "name": spec.name,
        "duration_s": spec.duration_s,
        "seed": spec.seed,
        "nodes": [
            {"address": p.node.address, "agent_id": p.node.agent_id, "x": p.x, "y": p.y}
            for p in spec.nodes
        ],
        "hubs": list(spec.hubs),
        "links": [_link_to_dict(l) for l in spec.links],
        "traffic": [
            {"kind": t.kind, "src": t.src, "dsts": list(t.dsts),
             "start_s": t.start_s, "stop_s": t.stop_s,
             "packet_bytes": t.packet_bytes, "rate_kbps": t.rate_kbps,
             "streams": t.streams, "ports_to_scan": t.ports_to_scan}
            for t in spec.traffic
        ],
        "phases": [
            {"name": p.name, "start_s": p.start_s, "end_s": p.end_s,
             "links": [_link_to_dict(l) for l in p.links]}
            for p in spec.phases
        ],
    }


def _link_to_dict(link: LinkSpec) -> dict:
    return {"a": link.a, "b": link.b, "delay_ms": link.delay_ms,
            "bandwidth_kbps": link.bandwidth_kbps, "loss_pct": link.loss_pct,
            "queue_packets": link.queue_packets}


def _link_from_dict(obj: dict) -> LinkSpec:
    return LinkSpec(
        a=obj["a"], b=obj["b"], delay_ms=float(obj["delay_ms"]),
        bandwidth_kbps=float(obj["bandwidth_kbps"]),
        loss_pct=float(obj.get("loss_pct", 0.0)),
        queue_packets=int(obj.get("queue_packets", 100)),
    )


def scenario_from_dict(obj: dict) -> ScenarioSpec:
    try:
        nodes = []
        for i, raw in enumerate(obj["nodes"]):
            address = raw["address"]
            if not is_ipv4(address):
                raise SpecError(f"nodes[{i}].address is not IPv4: {address!r}")
            nodes.append(NodePlacement(
                node=NodeId(address=address,
                            agent_id=raw.get("agent_id") or f"agent-{address.rsplit('.', 1)[1]}"),
                x=float(raw.get("x", 0.0)), y=float(raw.get("y", 0.0)),
            ))
        spec = ScenarioSpec(
            name=str(obj.get("name", "scenario")),
            duration_s=float(obj["duration_s"]),
            nodes=nodes,
            hubs=[str(h) for h in obj.get("hubs", [])],
            links=[_link_from_dict(l) for l in obj["links"]],
            traffic=[
                TrafficFlowSpec(
                    kind=t["kind"], src=t["src"],
                    dsts=list(t.get("dsts") or [t["dst"]]),
                    start_s=float(t["start_s"]), stop_s=float(t["stop_s"]),
                    packet_bytes=int(t["packet_bytes"]), rate_kbps=float(t["rate_kbps"]),
                    streams=int(t.get("streams", 1)),
                    ports_to_scan=int(t.get("ports_to_scan", 0)),
                )
                for t in obj.get("traffic", [])
            ],
            phases=[
                PhaseSpec(name=p.get("name", f"phase{i}"),
                          start_s=float(p["start_s"]), end_s=float(p["end_s"]),
                          links=[_link_from_dict(l) for l in p.get("links", [])])
                for i, p in enumerate(obj.get("phases", []))
            ],
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SpecError):
            raise
        raise SpecError(f"bad scenario file: {e}") from e
    spec.validate()
    return spec


def load_scenario(path: str | Path) -> ScenarioSpec:
    return scenario_from_dict(json.loads(Path(path).read_text()))
