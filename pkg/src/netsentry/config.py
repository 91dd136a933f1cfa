"""
Flat key/value config files with dotted section names.

    # agent.conf
    node.address = 192.168.1.4
    node.agent_id = agent-4
    controller.url = http://127.0.0.1:8700
    policy.latency_ms_max = 200

Unknown keys are rejected so typos fail loudly. See docs/config.md for the
full key list.
"""

from __future__ import annotations

from pathlib import Path

from .agent import AgentConfig
from .controller import Controller, CorrelationConfig, MemoryConfig
from .llm import LlmConfig
from .model import (
    Analyzer,
    CaptureBounds,
    CaptureParams,
    NodeId,
    ThresholdPolicy,
)
from .rules import RuleThresholds


class ConfigError(ValueError):
    pass


def parse_kv(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _take(values: dict[str, str], key: str, default=None) -> str | None:
    return values.pop(key, default)


def _take_float(values: dict[str, str], key: str, default: float) -> float:
    raw = values.pop(key, None)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected number, got {raw!r}") from None


def _take_int(values: dict[str, str], key: str, default: int) -> int:
    raw = values.pop(key, None)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected integer, got {raw!r}") from None


def _llm_from(values: dict[str, str]) -> LlmConfig | None:
    endpoint = _take(values, "llm.endpoint_url")
    model = _take(values, "llm.model_id", "default-model")
    key_var = _take(values, "llm.api_key_env_var", "NETSENTRY_LLM_API_KEY")
    timeout = _take_float(values, "llm.timeout_s", 20.0)
    retries = _take_int(values, "llm.max_retries", 1)
    if endpoint is None:
        return None
    return LlmConfig(endpoint_url=endpoint, model_id=model, api_key_env_var=key_var,
                     timeout_s=timeout, max_retries=retries)


def load_agent_config(path: str | Path) -> AgentConfig:
    values = parse_kv(Path(path).read_text())
    address = _take(values, "node.address")
    if address is None:
        raise ConfigError("node.address is required")
    agent_id = _take(values, "node.agent_id") or f"agent-{address.rsplit('.', 1)[1]}"
    try:
        node = NodeId(address=address, agent_id=agent_id)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    policy = ThresholdPolicy(
        latency_ms_max=_take_float(values, "policy.latency_ms_max", 200.0),
        jitter_ms_max=_take_float(values, "policy.jitter_ms_max", 50.0),
        packet_loss_pct_max=_take_float(values, "policy.packet_loss_pct_max", 5.0),
        sample_interval_s=_take_float(values, "policy.sample_interval_s", 2.0),
        cooldown_s=_take_float(values, "policy.cooldown_s", 30.0),
    )
    capture = CaptureParams(
        duration_s=_take_float(values, "capture.duration_s", 25.0),
        max_packets=_take_int(values, "capture.max_packets", 100_000),
    )
    bounds = CaptureBounds(
        minimum=CaptureParams(duration_s=_take_float(values, "capture.min_duration_s", 5.0),
                              max_packets=capture.max_packets),
        maximum=CaptureParams(duration_s=_take_float(values, "capture.max_duration_s", 100.0),
                              max_packets=capture.max_packets),
    )
    mode_raw = _take(values, "analyzer.mode", "rule")
    try:
        mode = Analyzer(mode_raw)
    except ValueError:
        raise ConfigError(f"analyzer.mode: expected rule or llm, got {mode_raw!r}") from None
    thresholds = RuleThresholds(
        flood_pps_min=_take_float(values, "rules.flood_pps_min", 200.0),
        syn_ratio_min=_take_float(values, "rules.syn_ratio_min", 0.8),
        udp_flood_pps_min=_take_float(values, "rules.udp_flood_pps_min", 200.0),
        port_scan_distinct_ports_min=_take_int(values, "rules.port_scan_distinct_ports_min", 20),
        port_scan_max_pkts_per_port=_take_float(values, "rules.port_scan_max_pkts_per_port", 3.0),
    )
    config = AgentConfig(
        node=node,
        controller_url=_take(values, "controller.url", "") or "",
        policy=policy,
        capture=capture,
        capture_bounds=bounds,
        analyzer_mode=mode,
        rule_thresholds=thresholds,
        llm=_llm_from(values),
        heartbeat_interval_s=_take_float(values, "agent.heartbeat_interval_s", 5.0),
        memory_capacity=_take_int(values, "agent.memory_capacity", 32),
        report_queue_capacity=_take_int(values, "agent.report_queue_capacity", 100),
    )
    # capture.command is consumed by the CLI, not AgentConfig.
    _take(values, "capture.command")
    _take(values, "telemetry.probe_host")
    _take(values, "telemetry.probe_port")
    if values:
        raise ConfigError(f"unknown keys: {', '.join(sorted(values))}")
    return config


def load_live_extras(path: str | Path) -> dict[str, str]:
    """Keys the agent binary itself needs (capture tool, probe target)."""
    values = parse_kv(Path(path).read_text())
    return {
        "capture.command": values.get("capture.command", ""),
        "telemetry.probe_host": values.get("telemetry.probe_host", "127.0.0.1"),
        "telemetry.probe_port": values.get("telemetry.probe_port", "7"),
    }


def load_controller_config(path: str | Path) -> Controller:
    values = parse_kv(Path(path).read_text())
    correlation = CorrelationConfig(
        attack_pps_min=_take_float(values, "correlate.attack_pps_min", 200.0),
        asymmetry_min=_take_float(values, "correlate.asymmetry_min", 5.0),
        bucket_s=_take_float(values, "correlate.bucket_s", 10.0),
    )
    memory = MemoryConfig(
        capacity=_take_int(values, "memory.capacity", 512),
        retention_s=_take_float(values, "memory.retention_s", 600.0),
    )
    llm = _llm_from(values)
    _take(values, "bind.host")
    _take(values, "bind.port")
    if values:
        raise ConfigError(f"unknown keys: {', '.join(sorted(values))}")
    return Controller(correlation=correlation, memory=memory, llm=llm)
