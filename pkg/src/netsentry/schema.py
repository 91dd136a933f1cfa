"""
Canonical JSON wire schema (schema_version "1") and strict validation.

Every domain type serializes to the JSON shapes documented in docs/wire.md.
Parsing distinguishes two failure classes: SchemaError for missing or
ill-typed fields (named by dotted path), InvariantError for well-typed
values that violate a domain invariant (e.g. confidence outside [0,1]).
"""

from __future__ import annotations

import json
from typing import Any

from .model import (
    AgentHealth,
    Analyzer,
    FlowFeatures,
    FlowKey,
    HealthStatus,
    Heartbeat,
    Incident,
    Metric,
    NodeId,
    PolicyRecommendation,
    Protocol,
    Role,
    TelemetrySample,
    ThreatCategory,
    ThreatReport,
    TimeWindow,
    TriggerDecision,
    Urgency,
    Verdict,
    is_ipv4,
)

SCHEMA_VERSION = "1"


class ReportValidationError(ValueError):
    """Base class for report/incident schema failures."""


class SchemaError(ReportValidationError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class InvariantError(ReportValidationError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


# ---------------------------------------------------------------------------
# Extraction helpers
# ---------------------------------------------------------------------------

def _require(obj: dict, field: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError(path or field, "expected a JSON object")
    if field not in obj:
        raise SchemaError(f"{path}.{field}" if path else field, "missing required field")
    return obj[field]


def _req_str(obj: dict, field: str, path: str) -> str:
    v = _require(obj, field, path)
    if not isinstance(v, str):
        raise SchemaError(_join(path, field), f"expected string, got {type(v).__name__}")
    return v


def _req_int(obj: dict, field: str, path: str) -> int:
    v = _require(obj, field, path)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(_join(path, field), f"expected integer, got {type(v).__name__}")
    return v


def _req_num(obj: dict, field: str, path: str) -> float:
    v = _require(obj, field, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(_join(path, field), f"expected number, got {type(v).__name__}")
    return float(v)


def _req_bool(obj: dict, field: str, path: str) -> bool:
    v = _require(obj, field, path)
    if not isinstance(v, bool):
        raise SchemaError(_join(path, field), f"expected boolean, got {type(v).__name__}")
    return v


def _req_list(obj: dict, field: str, path: str) -> list:
    v = _require(obj, field, path)
    if not isinstance(v, list):
        raise SchemaError(_join(path, field), f"expected array, got {type(v).__name__}")
    return v


def _req_obj(obj: dict, field: str, path: str) -> dict:
    v = _require(obj, field, path)
    if not isinstance(v, dict):
        raise SchemaError(_join(path, field), f"expected object, got {type(v).__name__}")
    return v


def _join(path: str, field: str) -> str:
    return f"{path}.{field}" if path else field


def _enum(cls, value: str, path: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise SchemaError(path, f"unknown value {value!r}, expected one of: {allowed}") from None


# ---------------------------------------------------------------------------
# To-dict (serialization)
# ---------------------------------------------------------------------------

def node_to_dict(node: NodeId) -> dict:
    return {"address": node.address, "agent_id": node.agent_id}


def window_to_dict(w: TimeWindow) -> dict:
    return {"start_us": w.start_us, "end_us": w.end_us}


def trigger_to_dict(t: TriggerDecision) -> dict:
    return {
        "fired": t.fired,
        "breached_metric": t.breached_metric.value if t.breached_metric else None,
        "observed": t.observed,
        "threshold": t.threshold,
    }


def verdict_to_dict(v: Verdict) -> dict:
    return {
        "category": v.category.value,
        "confidence": v.confidence,
        "evidence": list(v.evidence),
        "analyzer": v.analyzer.value,
        "model_id": v.model_id,
    }


def flow_to_dict(f: FlowFeatures) -> dict:
    return {
        "src": f.key.src,
        "dst": f.key.dst,
        "protocol": f.key.protocol.value,
        "window_start_us": f.window.start_us,
        "window_end_us": f.window.end_us,
        "packet_count": f.packet_count,
        "byte_count": f.byte_count,
        "pps": f.pps,
        "bps": f.bps,
        "syn_count": f.syn_count,
        "synack_count": f.synack_count,
        "distinct_dst_ports": f.distinct_dst_ports,
        "mean_iat_ms": f.mean_iat_ms,
        "stddev_iat_ms": f.stddev_iat_ms,
    }


def report_to_dict(r: ThreatReport) -> dict:
    return {
        "report_id": r.report_id,
        "node": node_to_dict(r.node),
        "window": window_to_dict(r.window),
        "trigger": trigger_to_dict(r.trigger),
        "packet_count": r.packet_count,
        "byte_count": r.byte_count,
        "top_flows": [flow_to_dict(f) for f in r.top_flows],
        "verdict": verdict_to_dict(r.verdict),
        "summary_text": r.summary_text,
        "created_at_us": r.created_at_us,
    }


def sample_to_dict(s: TelemetrySample) -> dict:
    return {
        "node": node_to_dict(s.node),
        "at_us": s.at_us,
        "latency_ms": s.latency_ms,
        "jitter_ms": s.jitter_ms,
        "packet_loss_pct": s.packet_loss_pct,
        "throughput_kbps": s.throughput_kbps,
    }


def heartbeat_to_dict(h: Heartbeat) -> dict:
    return {
        "agent_id": h.agent_id,
        "address": h.address,
        "at_us": h.at_us,
        "cycles_completed": h.cycles_completed,
        "reports_sent": h.reports_sent,
        "queue_depth": h.queue_depth,
        "heartbeat_interval_s": h.heartbeat_interval_s,
        "sample": sample_to_dict(h.sample) if h.sample else None,
    }


def incident_to_dict(i: Incident) -> dict:
    return {
        "incident_id": i.incident_id,
        "window": window_to_dict(i.window),
        "category": i.category.value,
        "confidence": i.confidence,
        "roles": {addr: role.value for addr, role in sorted(i.roles.items())},
        "supporting_reports": list(i.supporting_reports),
        "recommendation": {
            "advisory_actions": list(i.recommendation.advisory_actions),
            "urgency": i.recommendation.urgency.value,
        },
        "narrative": i.narrative,
    }


def health_to_dict(h: AgentHealth) -> dict:
    return {
        "agent_id": h.agent_id,
        "last_heartbeat_at_us": h.last_heartbeat_at_us,
        "status": h.status.value,
    }


def report_to_json(r: ThreatReport) -> str:
    return json.dumps(report_to_dict(r), sort_keys=True)


def incident_to_json(i: Incident) -> str:
    return json.dumps(incident_to_dict(i), sort_keys=True)


# ---------------------------------------------------------------------------
# From-dict (validation)
# ---------------------------------------------------------------------------

def parse_node(obj: dict, path: str = "node") -> NodeId:
    address = _req_str(obj, "address", path)
    agent_id = _req_str(obj, "agent_id", path)
    if not is_ipv4(address):
        raise InvariantError(_join(path, "address"), f"not a valid IPv4 address: {address!r}")
    if not agent_id:
        raise InvariantError(_join(path, "agent_id"), "must be non-empty")
    return NodeId(address=address, agent_id=agent_id)


def parse_window(obj: dict, path: str = "window") -> TimeWindow:
    start = _req_int(obj, "start_us", path)
    end = _req_int(obj, "end_us", path)
    if end < start:
        raise InvariantError(path, f"end_us {end} before start_us {start}")
    return TimeWindow(start_us=start, end_us=end)


def parse_trigger(obj: dict, path: str = "trigger") -> TriggerDecision:
    fired = _req_bool(obj, "fired", path)
    raw_metric = _require(obj, "breached_metric", path)
    metric = None
    if raw_metric is not None:
        if not isinstance(raw_metric, str):
            raise SchemaError(_join(path, "breached_metric"), "expected string or null")
        metric = _enum(Metric, raw_metric, _join(path, "breached_metric"))
    observed = _req_num(obj, "observed", path)
    threshold = _req_num(obj, "threshold", path)
    if fired != (metric is not None):
        raise InvariantError(path, "fired must hold exactly when breached_metric is present")
    return TriggerDecision(fired=fired, breached_metric=metric, observed=observed, threshold=threshold)


def parse_verdict(obj: dict, path: str = "verdict") -> Verdict:
    category = _enum(ThreatCategory, _req_str(obj, "category", path), _join(path, "category"))
    confidence = _req_num(obj, "confidence", path)
    evidence_raw = _req_list(obj, "evidence", path)
    evidence = []
    for i, item in enumerate(evidence_raw):
        if not isinstance(item, str):
            raise SchemaError(f"{path}.evidence[{i}]", "expected string")
        evidence.append(item)
    analyzer = _enum(Analyzer, _req_str(obj, "analyzer", path), _join(path, "analyzer"))
    model_id = obj.get("model_id")
    if model_id is not None and not isinstance(model_id, str):
        raise SchemaError(_join(path, "model_id"), "expected string or null")
    if not 0.0 <= confidence <= 1.0:
        raise InvariantError(_join(path, "confidence"), f"must be in [0,1], got {confidence}")
    if category is not ThreatCategory.BENIGN and not evidence:
        raise InvariantError(_join(path, "evidence"), f"must be non-empty for {category.value}")
    return Verdict(category=category, confidence=confidence, evidence=evidence,
                   analyzer=analyzer, model_id=model_id)


def parse_flow(obj: dict, path: str) -> FlowFeatures:
    src = _req_str(obj, "src", path)
    dst = _req_str(obj, "dst", path)
    protocol = _enum(Protocol, _req_str(obj, "protocol", path), _join(path, "protocol"))
    start = _req_int(obj, "window_start_us", path)
    end = _req_int(obj, "window_end_us", path)
    if end < start:
        raise InvariantError(path, "window_end_us before window_start_us")
    packet_count = _req_int(obj, "packet_count", path)
    byte_count = _req_int(obj, "byte_count", path)
    for name, value in (("packet_count", packet_count), ("byte_count", byte_count)):
        if value < 0:
            raise InvariantError(_join(path, name), "must be >= 0")
    distinct = _req_int(obj, "distinct_dst_ports", path)
    if distinct > packet_count:
        raise InvariantError(_join(path, "distinct_dst_ports"), "cannot exceed packet_count")
    stddev = _req_num(obj, "stddev_iat_ms", path)
    if stddev < 0:
        raise InvariantError(_join(path, "stddev_iat_ms"), "must be >= 0")
    return FlowFeatures(
        key=FlowKey(src=src, dst=dst, protocol=protocol),
        window=TimeWindow(start_us=start, end_us=end),
        packet_count=packet_count,
        byte_count=byte_count,
        pps=_req_num(obj, "pps", path),
        bps=_req_num(obj, "bps", path),
        syn_count=_req_int(obj, "syn_count", path),
        synack_count=_req_int(obj, "synack_count", path),
        distinct_dst_ports=distinct,
        mean_iat_ms=_req_num(obj, "mean_iat_ms", path),
        stddev_iat_ms=stddev,
    )


def parse_report(obj: dict) -> ThreatReport:
    report_id = _req_str(obj, "report_id", "")
    if not report_id:
        raise InvariantError("report_id", "must be non-empty")
    node = parse_node(_req_obj(obj, "node", ""), "node")
    window = parse_window(_req_obj(obj, "window", ""), "window")
    trigger = parse_trigger(_req_obj(obj, "trigger", ""), "trigger")
    packet_count = _req_int(obj, "packet_count", "")
    byte_count = _req_int(obj, "byte_count", "")
    if packet_count < 0:
        raise InvariantError("packet_count", "must be >= 0")
    if byte_count < 0:
        raise InvariantError("byte_count", "must be >= 0")
    flows_raw = _req_list(obj, "top_flows", "")
    if len(flows_raw) > 20:
        raise InvariantError("top_flows", f"at most 20 flows allowed, got {len(flows_raw)}")
    top_flows = []
    for i, raw in enumerate(flows_raw):
        if not isinstance(raw, dict):
            raise SchemaError(f"top_flows[{i}]", "expected object")
        top_flows.append(parse_flow(raw, f"top_flows[{i}]"))
    verdict = parse_verdict(_req_obj(obj, "verdict", ""), "verdict")
    summary_text = _req_str(obj, "summary_text", "")
    created_at_us = _req_int(obj, "created_at_us", "")
    return ThreatReport(
        report_id=report_id,
        node=node,
        window=window,
        trigger=trigger,
        packet_count=packet_count,
        byte_count=byte_count,
        top_flows=top_flows,
        verdict=verdict,
        summary_text=summary_text,
        created_at_us=created_at_us,
    )


def validate_report(raw: bytes | str | dict) -> ThreatReport:
    """Parse and fully validate a serialized threat report.

    Accepts raw JSON bytes/text or an already-decoded object. Raises
    SchemaError or InvariantError; never returns a partially valid report.
    """
    if isinstance(raw, (bytes, str)):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise SchemaError("$", f"invalid JSON: {e}") from None
    else:
        obj = raw
    if not isinstance(obj, dict):
        raise SchemaError("$", "expected a JSON object")
    return parse_report(obj)


def parse_incident(obj: dict) -> Incident:
    window = parse_window(_req_obj(obj, "window", ""), "window")
    category = _enum(ThreatCategory, _req_str(obj, "category", ""), "category")
    confidence = _req_num(obj, "confidence", "")
    roles_raw = _req_obj(obj, "roles", "")
    roles = {}
    for addr, role in roles_raw.items():
        if not is_ipv4(addr):
            raise InvariantError(f"roles.{addr}", "not a valid IPv4 address")
        if not isinstance(role, str):
            raise SchemaError(f"roles.{addr}", "expected string role")
        roles[addr] = _enum(Role, role, f"roles.{addr}")
    supporting = [s for s in _req_list(obj, "supporting_reports", "") if isinstance(s, str)]
    rec_raw = _req_obj(obj, "recommendation", "")
    actions = _req_list(rec_raw, "advisory_actions", "recommendation")
    urgency = _enum(Urgency, _req_str(rec_raw, "urgency", "recommendation"), "recommendation.urgency")
    return Incident(
        incident_id=_req_str(obj, "incident_id", ""),
        window=window,
        category=category,
        confidence=confidence,
        roles=roles,
        supporting_reports=supporting,
        recommendation=PolicyRecommendation(advisory_actions=[str(a) for a in actions], urgency=urgency),
        narrative=_req_str(obj, "narrative", ""),
    )


def parse_heartbeat(obj: dict) -> Heartbeat:
    agent_id = _req_str(obj, "agent_id", "")
    address = _req_str(obj, "address", "")
    if not is_ipv4(address):
        raise InvariantError("address", f"not a valid IPv4 address: {address!r}")
    sample = None
    raw_sample = obj.get("sample")
    if raw_sample is not None:
        if not isinstance(raw_sample, dict):
            raise SchemaError("sample", "expected object or null")
        sample = parse_sample(raw_sample, "sample")
    interval = obj.get("heartbeat_interval_s", 5.0)
    if isinstance(interval, bool) or not isinstance(interval, (int, float)) or interval <= 0:
        raise SchemaError("heartbeat_interval_s", "expected positive number")
    return Heartbeat(
        agent_id=agent_id,
        address=address,
        at_us=_req_int(obj, "at_us", ""),
        cycles_completed=_req_int(obj, "cycles_completed", ""),
        reports_sent=_req_int(obj, "reports_sent", ""),
        queue_depth=_req_int(obj, "queue_depth", ""),
        heartbeat_interval_s=float(interval),
        sample=sample,
    )


def parse_sample(obj: dict, path: str = "") -> TelemetrySample:
    node = parse_node(_req_obj(obj, "node", path), _join(path, "node"))
    loss = _req_num(obj, "packet_loss_pct", path)
    if not 0.0 <= loss <= 100.0:
        raise InvariantError(_join(path, "packet_loss_pct"), f"must be in [0,100], got {loss}")
    return TelemetrySample(
        node=node,
        at_us=_req_int(obj, "at_us", path),
        latency_ms=_req_num(obj, "latency_ms", path),
        jitter_ms=_req_num(obj, "jitter_ms", path),
        packet_loss_pct=loss,
        throughput_kbps=_req_num(obj, "throughput_kbps", path),
    )
