"""netsentry: two-tier network security monitoring.

Node agents sample telemetry, capture traffic on threshold breaches,
extract flow features, and classify them with rules or an LLM backend; a
central controller correlates their reports into incidents with
attacker/victim roles and serves a live API, dashboard feed, and chat. A
deterministic discrete-event simulator reproduces multi-node attack and
link-degradation experiments without touching a real network.
"""

__version__ = "0.1.0"

from .agent import Agent, AgentConfig, plan
from .controller import Controller, CorrelationConfig, MemoryConfig
from .flows import export_csv, extract_flows
from .llm import LlmConfig, analyze, build_prompt, parse_llm_response
from .model import (
    Analyzer,
    CaptureBounds,
    CaptureParams,
    FlowFeatures,
    FlowKey,
    Incident,
    NodeId,
    PacketRecord,
    Protocol,
    TelemetrySample,
    ThreatCategory,
    ThreatReport,
    ThresholdPolicy,
    TimeWindow,
    TriggerDecision,
    Verdict,
)
from .pcap import read_pcap, write_pcap
from .rules import RuleThresholds, classify_rules
from .schema import InvariantError, SchemaError, validate_report
from .telemetry import evaluate, tune

__all__ = [
    "__version__", "Agent", "AgentConfig", "plan", "Controller",
    "CorrelationConfig", "MemoryConfig", "export_csv", "extract_flows",
    "LlmConfig", "analyze", "build_prompt", "parse_llm_response", "Analyzer",
    "CaptureBounds", "CaptureParams", "FlowFeatures", "FlowKey", "Incident",
    "NodeId", "PacketRecord", "Protocol", "TelemetrySample", "ThreatCategory",
    "ThreatReport", "ThresholdPolicy", "TimeWindow", "TriggerDecision",
    "Verdict", "read_pcap", "write_pcap", "RuleThresholds", "classify_rules",
    "InvariantError", "SchemaError", "validate_report", "evaluate", "tune",
]
