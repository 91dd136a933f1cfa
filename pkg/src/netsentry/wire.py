"""
WireEnvelope: the framing for every message pushed over the event stream.

{"kind": ..., "payload": {...}, "sent_at": <int us>, "schema_version": "1"}

Each kind's payload has its own validator; validate_envelope() rejects
anything that does not conform, which keeps the push channel as strict as
the ingest endpoints.
"""

from __future__ import annotations

import json

from .model import HealthStatus, ThreatCategory, is_ipv4
from .schema import SCHEMA_VERSION, SchemaError, parse_heartbeat, parse_incident

ENVELOPE_KINDS = ("report", "heartbeat", "incident", "health",
                  "chat_request", "chat_response")


def make_envelope(kind: str, payload: dict, sent_at_us: int) -> dict:
    if kind not in ENVELOPE_KINDS:
        raise ValueError(f"unknown envelope kind {kind!r}")
    return {
        "kind": kind,
        "payload": payload,
        "sent_at": sent_at_us,
        "schema_version": SCHEMA_VERSION,
    }


def envelope_to_json(envelope: dict) -> str:
    return json.dumps(envelope, sort_keys=True)


def _validate_report_digest(payload: dict) -> None:
    for field_name, kind in (("report_id", str), ("node", str), ("category", str),
                             ("packet_count", int)):
        if not isinstance(payload.get(field_name), kind):
            raise SchemaError(f"payload.{field_name}", f"expected {kind.__name__}")
    if not is_ipv4(payload["node"]):
        raise SchemaError("payload.node", "expected IPv4 address")
    ThreatCategory(payload["category"])
    confidence = payload.get("confidence")
    if not isinstance(confidence, (int, float)) or not 0 <= confidence <= 1:
        raise SchemaError("payload.confidence", "expected number in [0,1]")
    window = payload.get("window")
    if not isinstance(window, dict) or not isinstance(window.get("start_us"), int) \
            or not isinstance(window.get("end_us"), int):
        raise SchemaError("payload.window", "expected {start_us, end_us}")


def _validate_health(payload: dict) -> None:
    if not isinstance(payload.get("agent_id"), str):
        raise SchemaError("payload.agent_id", "expected string")
    if not isinstance(payload.get("last_heartbeat_at_us"), int):
        raise SchemaError("payload.last_heartbeat_at_us", "expected integer")
    HealthStatus(payload.get("status"))


def _validate_chat(payload: dict, field_name: str) -> None:
    if not isinstance(payload.get(field_name), str):
        raise SchemaError(f"payload.{field_name}", "expected string")


def validate_envelope(raw: bytes | str | dict) -> dict:
    """Parse and validate one envelope; raises SchemaError on any defect."""
    if isinstance(raw, (bytes, str)):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise SchemaError("$", f"invalid JSON: {e}") from None
    else:
        obj = raw
    if not isinstance(obj, dict):
        raise SchemaError("$", "expected object")
    kind = obj.get("kind")
    if kind not in ENVELOPE_KINDS:
        raise SchemaError("kind", f"expected one of {ENVELOPE_KINDS}")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"expected {SCHEMA_VERSION!r}")
    if not isinstance(obj.get("sent_at"), int):
        raise SchemaError("sent_at", "expected integer microseconds")
    payload = obj.get("payload")
    if not isinstance(payload, dict):
        raise SchemaError("payload", "expected object")

    try:
        if kind == "report":
            _validate_report_digest(payload)
        elif kind == "heartbeat":
            parse_heartbeat(payload)
        elif kind == "incident":
            parse_incident(payload)
        elif kind == "health":
            _validate_health(payload)
        elif kind == "chat_request":
            _validate_chat(payload, "question")
        elif kind == "chat_response":
            _validate_chat(payload, "answer")
    except ValueError as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError("payload", str(e)) from None
    return obj
