"""
LLM-backed analysis with a total fallback to the rule classifier.

The transport is deliberately minimal: POST {"model", "prompt"} and expect
{"text"} back. Vendor-specific APIs are adapted outside this module. Any
transport or parse failure after the configured retries degrades to the
rule classifier; analyze() never raises.
"""

from __future__ import annotations

import io
import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass

from .flows import export_csv
from .model import Analyzer, FlowFeatures, ThreatCategory, TriggerDecision, Verdict
from .rules import RuleThresholds, classify_rules

PROMPT_HEADER = (
    "You are a network security analyst. Review the flow features below, "
    "captured on one node during one monitoring window, and classify the "
    "traffic."
)

OUTPUT_CONTRACT = (
    "Respond with a single JSON object and nothing else, with fields: "
    '"category" (one of benign, dos_tcp_flood, dos_udp_flood, port_scan, '
    "recon_distributed, unknown_anomaly), \"confidence\" (number in [0,1]), "
    '"evidence" (array of strings citing the decisive feature values), and '
    '"summary" (one sentence for a human operator).'
)


class ParseError(Exception):
    pass


class TransportError(Exception):
    pass


@dataclass
class LlmConfig:
    endpoint_url: str
    model_id: str
    api_key_env_var: str = "NETSENTRY_LLM_API_KEY"
    timeout_s: float = 20.0
    max_retries: int = 1

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")


def build_prompt(flows: list[FlowFeatures], trigger: TriggerDecision, memory_digest: str) -> str:
    """Render the deterministic analysis prompt (byte-identical per input)."""
    table = io.StringIO()
    export_csv(flows, table)
    if trigger.fired:
        trigger_line = (
            f"Trigger: {trigger.breached_metric.value} breached, "
            f"observed {trigger.observed:.6g} against threshold {trigger.threshold:.6g}."
        )
    else:
        trigger_line = "Trigger: none (scheduled sweep capture)."
    return "\n".join([
        PROMPT_HEADER,
        "",
        "Flow features (CSV):",
        table.getvalue().rstrip("\n"),
        "",
        trigger_line,
        f"Recent agent memory: {memory_digest or '(empty)'}",
        "",
        OUTPUT_CONTRACT,
    ])


def _first_json_object(text: str) -> dict:
    """Extract the first balanced JSON object, tolerating prose and fences."""
    depth = 0
    start = None
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"' and depth > 0:
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                try:
                    obj = json.loads(text[start:i + 1])
                except json.JSONDecodeError:
                    raise ParseError("unparsable JSON object in response") from None
                if isinstance(obj, dict):
                    return obj
                raise ParseError("top-level JSON value is not an object")
    raise ParseError("no JSON object found in response")


def parse_llm_response(text: str) -> Verdict:
    """Map a raw model response to a Verdict.

    Unknown category strings become unknown_anomaly with the original
    string preserved in evidence; confidence is clamped to [0,1].
    """
    verdict, _ = parse_llm_response_with_summary(text)
    return verdict


def parse_llm_response_with_summary(text: str) -> tuple[Verdict, str]:
    obj = _first_json_object(text)
    if "category" not in obj:
        raise ParseError("missing required field: category")
    if "confidence" not in obj:
        raise ParseError("missing required field: confidence")
    raw_category = obj["category"]
    if not isinstance(raw_category, str):
        raise ParseError("category must be a string")
    try:
        confidence = float(obj["confidence"])
    except (TypeError, ValueError):
        raise ParseError("confidence must be a number") from None
    confidence = min(max(confidence, 0.0), 1.0)

    evidence = [str(e) for e in obj.get("evidence", []) if isinstance(e, (str, int, float))]
    summary = obj.get("summary", "")
    if not isinstance(summary, str):
        summary = str(summary)

    try:
        category = ThreatCategory(raw_category.strip().lower())
    except ValueError:
        category = ThreatCategory.UNKNOWN_ANOMALY
        evidence.append(f"model reported unrecognized category: {raw_category!r}")

    if category is not ThreatCategory.BENIGN and not evidence:
        evidence.append(f"model reported {category.value}" + (f": {summary}" if summary else ""))

    return Verdict(
        category=category, confidence=confidence,
        evidence=evidence, analyzer=Analyzer.LLM,
    ), summary


class HttpLlmClient:
    """Blocking JSON-over-HTTP transport for the minimal LLM protocol."""

    def __init__(self, config: LlmConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        body = json.dumps({"model": self.config.model_id, "prompt": prompt}).encode()
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env_var, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        request = urllib.request.Request(
            self.config.endpoint_url, data=body, headers=headers, method="POST"
        )
        try:
            with urllib.request.urlopen(request, timeout=self.config.timeout_s) as resp:
                if resp.status != 200:
                    raise TransportError(f"endpoint returned HTTP {resp.status}")
                payload = json.loads(resp.read().decode("utf-8", errors="replace"))
        except (urllib.error.URLError, OSError, ValueError) as e:
            raise TransportError(str(e)) from e
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            raise TransportError("endpoint response missing 'text' field")
        return payload["text"]


def _rule_summary(flows: list[FlowFeatures], verdict: Verdict) -> str:
    total = sum(f.packet_count for f in flows)
    if verdict.category is ThreatCategory.BENIGN:
        return f"Traffic normal: {total} packets across {len(flows)} flows, no rule matched."
    top = max(flows, key=lambda f: f.pps, default=None)
    detail = f"; busiest flow {top.key.src}->{top.key.dst} at {top.pps:.6g} pps" if top else ""
    return (
        f"Detected {verdict.category.value} "
        f"(confidence {verdict.confidence:.2f}) over {len(flows)} flows{detail}."
    )


def analyze(
    flows: list[FlowFeatures],
    trigger: TriggerDecision,
    memory_digest: str,
    mode: Analyzer = Analyzer.RULE,
    llm: LlmConfig | None = None,
    thresholds: RuleThresholds | None = None,
    client: HttpLlmClient | None = None,
) -> tuple[Verdict, str]:
    """Analyze one capture window; total (never raises).

    In llm mode the endpoint is tried up to 1 + max_retries times and any
    failure falls back to classify_rules with a fallback note in evidence.
    """
    if mode is Analyzer.RULE:
        verdict = classify_rules(flows, thresholds)
        return verdict, _rule_summary(flows, verdict)

    if llm is None:
        verdict = classify_rules(flows, thresholds)
        verdict.evidence.append("llm_fallback: no llm configured")
        return verdict, _rule_summary(flows, verdict)

    transport = client or HttpLlmClient(llm)
    prompt = build_prompt(flows, trigger, memory_digest)
    failure = "unknown"
    for _ in range(1 + max(llm.max_retries, 0)):
        try:
            text = transport.complete(prompt)
            verdict, summary = parse_llm_response_with_summary(text)
            verdict.model_id = llm.model_id
            return verdict, summary or _rule_summary(flows, verdict)
        except (TransportError, ParseError) as e:
            failure = f"{type(e).__name__}: {e}"
    verdict = classify_rules(flows, thresholds)
    verdict.evidence.append(f"llm_fallback: {failure}")
    return verdict, _rule_summary(flows, verdict)
