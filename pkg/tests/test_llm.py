"""Prompt construction, response parsing, and fallback totality."""

from __future__ import annotations

import json

import pytest

from conftest import make_trigger
from netsentry.flows import extract_flows
from netsentry.llm import (
    LlmConfig,
    ParseError,
    analyze,
    build_prompt,
    parse_llm_response,
)
from netsentry.llmstub import StubLlmServer
from netsentry.model import Analyzer, PacketRecord, Protocol, ThreatCategory, TimeWindow
from netsentry.rules import RuleThresholds

WINDOW = TimeWindow(0, 1_000_000)


def flood_flows(pps=610.0, packets=3050):
    records = []
    gap = 1_000_000 // packets
    for k in range(packets):
        records.append(PacketRecord(
            at_us=k * gap, src="192.168.1.1", dst="192.168.1.4",
            protocol=Protocol.TCP, src_port=20000, dst_port=80,
            length_bytes=512, tcp_flags=frozenset({"SYN"}),
        ))
    return extract_flows(records, WINDOW)


class TestBuildPrompt:
    def test_deterministic(self):
        flows = flood_flows()
        trigger = make_trigger()
        a = build_prompt(flows, trigger, "nothing notable")
        b = build_prompt(flows, trigger, "nothing notable")
        assert a == b

    def test_empty_flows_has_header_no_rows(self):
        prompt = build_prompt([], make_trigger(fired=False), "")
        csv_start = prompt.index("src,dst,protocol")
        csv_section = prompt[csv_start:].split("\n")[0:2]
        assert csv_section[0].startswith("src,dst,protocol")
        assert not csv_section[1].startswith("192.")

    def test_flow_table_row_count_matches_flows(self):
        flows = flood_flows()
        prompt = build_prompt(flows, make_trigger(), "")
        data_rows = [line for line in prompt.split("\n") if line.startswith("192.")]
        assert len(data_rows) == len(flows)

    def test_contract_and_trigger_present(self):
        prompt = build_prompt([], make_trigger(observed=640.0), "digest here")
        assert '"category"' in prompt
        assert "latency" in prompt and "640" in prompt
        assert "digest here" in prompt


class TestParseResponse:
    def test_plain_json(self):
        v = parse_llm_response('{"category":"benign","confidence":1,"evidence":[],"summary":"normal"}')
        assert v.category is ThreatCategory.BENIGN
        assert v.confidence == 1.0
        assert v.analyzer is Analyzer.LLM

    def test_fenced_json_with_prose(self):
        text = (
            "Based on my analysis, this looks like an attack.\n"
            "```json\n"
            '{"category": "dos_tcp_flood", "confidence": 0.9, '
            '"evidence": ["pps=610"], "summary": "SYN flood"}\n'
            "```\nStay safe."
        )
        v = parse_llm_response(text)
        assert v.category is ThreatCategory.DOS_TCP_FLOOD
        assert v.confidence == 0.9

    def test_no_json_raises(self):
        with pytest.raises(ParseError):
            parse_llm_response("I cannot analyze this.")

    def test_missing_category_raises(self):
        with pytest.raises(ParseError):
            parse_llm_response('{"confidence": 0.5}')

    def test_unknown_category_maps_to_unknown_anomaly(self):
        v = parse_llm_response('{"category": "weird_traffic", "confidence": 0.7, "evidence": ["x"]}')
        assert v.category is ThreatCategory.UNKNOWN_ANOMALY
        assert any("weird_traffic" in e for e in v.evidence)

    def test_confidence_clamped(self):
        v = parse_llm_response('{"category": "benign", "confidence": 3.5}')
        assert v.confidence == 1.0

    def test_braces_inside_strings_handled(self):
        text = 'noise {"category": "benign", "confidence": 1, "summary": "a { b } c"} trailing'
        assert parse_llm_response(text).category is ThreatCategory.BENIGN

    def test_partial_round_trip(self):
        for category in ThreatCategory:
            payload = {"category": category.value, "confidence": 0.8,
                       "evidence": ["e1"], "summary": "s"}
            assert parse_llm_response(json.dumps(payload)).category is category


class TestAnalyze:
    def test_rule_mode_flood(self):
        verdict, summary = analyze(flood_flows(), make_trigger(), "", mode=Analyzer.RULE)
        assert verdict.category is ThreatCategory.DOS_TCP_FLOOD
        assert "dos_tcp_flood" in summary

    def test_unreachable_endpoint_falls_back(self):
        config = LlmConfig(endpoint_url="http://127.0.0.1:1/", model_id="m",
                           timeout_s=0.3, max_retries=0)
        verdict, _ = analyze(flood_flows(), make_trigger(), "",
                             mode=Analyzer.LLM, llm=config)
        assert verdict.analyzer is Analyzer.RULE
        assert any(e.startswith("llm_fallback:") for e in verdict.evidence)
        assert verdict.category is ThreatCategory.DOS_TCP_FLOOD

    def test_stub_benign_response(self):
        with StubLlmServer() as stub:
            config = LlmConfig(endpoint_url=stub.url, model_id="stub-model", timeout_s=5.0)
            verdict, summary = analyze([], make_trigger(fired=False), "",
                                       mode=Analyzer.LLM, llm=config)
        assert verdict.category is ThreatCategory.BENIGN
        assert verdict.analyzer is Analyzer.LLM
        assert verdict.model_id == "stub-model"
        assert summary == "Traffic appears normal."

    def test_fault_injection_always_returns_verdict(self):
        behaviors = ["garbage", "malformed", "http500", "empty", "prose", "ok"]
        with StubLlmServer(behaviors=behaviors) as stub:
            config = LlmConfig(endpoint_url=stub.url, model_id="stub",
                               timeout_s=2.0, max_retries=0)
            for expected_llm in (False, False, False, False, True, True):
                verdict, _ = analyze(flood_flows(), make_trigger(), "",
                                     mode=Analyzer.LLM, llm=config)
                assert verdict is not None
                assert (verdict.analyzer is Analyzer.LLM) == expected_llm

    def test_timeout_falls_back(self):
        with StubLlmServer(behaviors=["hang"], hang_s=3.0) as stub:
            config = LlmConfig(endpoint_url=stub.url, model_id="stub",
                               timeout_s=0.3, max_retries=0)
            verdict, _ = analyze(flood_flows(), make_trigger(), "",
                                 mode=Analyzer.LLM, llm=config)
        assert verdict.analyzer is Analyzer.RULE
        assert verdict.category is ThreatCategory.DOS_TCP_FLOOD

    def test_retry_then_success(self):
        with StubLlmServer(behaviors=["garbage", "ok"]) as stub:
            config = LlmConfig(endpoint_url=stub.url, model_id="stub",
                               timeout_s=2.0, max_retries=1)
            verdict, _ = analyze([], make_trigger(fired=False), "",
                                 mode=Analyzer.LLM, llm=config)
        assert verdict.analyzer is Analyzer.LLM
        assert stub.request_count == 2

    def test_api_key_sent_as_bearer(self, monkeypatch):
        monkeypatch.setenv("TEST_LLM_KEY", "sekrit")
        with StubLlmServer() as stub:
            config = LlmConfig(endpoint_url=stub.url, model_id="stub",
                               api_key_env_var="TEST_LLM_KEY", timeout_s=2.0)
            verdict, _ = analyze([], make_trigger(fired=False), "",
                                 mode=Analyzer.LLM, llm=config)
        assert verdict.analyzer is Analyzer.LLM
        assert stub.auth_headers == ["Bearer sekrit"]
