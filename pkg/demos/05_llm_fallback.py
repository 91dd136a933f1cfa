#!/usr/bin/env python3
"""The LLM backend and its total fallback.

Runs the same flood window through a healthy stub endpoint, then through a
misbehaving one (garbage, wrong JSON, HTTP 500, a hang). Analysis never
fails: anything the model side breaks falls back to the rule classifier
with the reason recorded in evidence.
"""

import json

from netsentry import Analyzer, FlowFeatures, FlowKey, Protocol, TimeWindow
from netsentry.llm import LlmConfig, analyze, build_prompt
from netsentry.llmstub import StubLlmServer
from netsentry.model import TriggerDecision, Metric

WINDOW = TimeWindow(0, 5_000_000)
flood = [FlowFeatures(
    key=FlowKey("192.168.1.1", "192.168.1.4", Protocol.TCP), window=WINDOW,
    packet_count=3050, byte_count=3050 * 512, pps=610.0, bps=610 * 512 * 8,
    syn_count=3050, synack_count=0, distinct_dst_ports=1,
    mean_iat_ms=1.6, stddev_iat_ms=0.1,
)]
trigger = TriggerDecision(fired=True, breached_metric=Metric.LOSS,
                          observed=20.0, threshold=5.0)

print("--- the prompt the model sees (deterministic) ---")
print(build_prompt(flood, trigger, "benign (1.00) at 1000000us")[:400], "...\n")

verdict_json = {"category": "dos_tcp_flood", "confidence": 0.93,
                "evidence": ["610 pps of pure SYNs to one host"],
                "summary": "High-rate SYN flood toward 192.168.1.4."}

with StubLlmServer(verdict=verdict_json) as stub:
    config = LlmConfig(endpoint_url=stub.url, model_id="demo-model")
    verdict, summary = analyze(flood, trigger, "", mode=Analyzer.LLM, llm=config)
    print(f"healthy endpoint -> {verdict.category.value} "
          f"(analyzer={verdict.analyzer.value}, model={verdict.model_id})")
    print(f"  summary: {summary}\n")

print("now the same window against a misbehaving endpoint:")
for behavior in ("garbage", "malformed", "http500", "hang"):
    with StubLlmServer(behaviors=[behavior], hang_s=3.0) as stub:
        config = LlmConfig(endpoint_url=stub.url, model_id="demo-model",
                           timeout_s=0.5, max_retries=0)
        verdict, _ = analyze(flood, trigger, "", mode=Analyzer.LLM, llm=config)
        note = next(e for e in verdict.evidence if e.startswith("llm_fallback:"))
        print(f"  {behavior:<10} -> {verdict.category.value} via "
              f"{verdict.analyzer.value} ({note[:60]}...)")
