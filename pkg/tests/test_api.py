"""HTTP API: endpoints, event stream ordering, envelope validity."""

from __future__ import annotations

import json
import threading
import time
import urllib.request

import pytest

from conftest import make_trigger, make_verdict
from netsentry.controller import Controller
from netsentry.httpclient import ApiError, HttpTransport, chat, get_json
from netsentry.model import (
    FlowFeatures,
    FlowKey,
    Heartbeat,
    NodeId,
    Protocol,
    ThreatCategory,
    ThreatReport,
    TimeWindow,
)
from netsentry.schema import report_to_dict
from netsentry.server import ControllerServer
from netsentry.wire import validate_envelope

WINDOW = TimeWindow(2_000_000, 7_000_000)


def flood_report(address="192.168.1.4", src="192.168.1.1", report_id="agent-4-r1"):
    flow = FlowFeatures(
        key=FlowKey(src, address, Protocol.TCP), window=WINDOW,
        packet_count=1830, byte_count=1830 * 512, pps=366.0, bps=366 * 512 * 8.0,
        syn_count=1830, synack_count=0, distinct_dst_ports=1,
        mean_iat_ms=2.7, stddev_iat_ms=0.4,
    )
    return ThreatReport(
        report_id=report_id,
        node=NodeId(address=address, agent_id=f"agent-{address.rsplit('.', 1)[1]}"),
        window=WINDOW, trigger=make_trigger(),
        packet_count=1830, byte_count=1830 * 512, top_flows=[flow],
        verdict=make_verdict(ThreatCategory.DOS_TCP_FLOOD, confidence=0.9),
        summary_text="inbound flood", created_at_us=WINDOW.end_us,
    )


class EventCollector:
    def __init__(self, url: str):
        self.url = url
        self.envelopes: list[dict] = []
        self._thread = threading.Thread(target=self._consume, daemon=True)
        self._thread.start()
        time.sleep(0.15)  # let the subscription register

    def _consume(self):
        request = urllib.request.Request(f"{self.url}/v1/events")
        try:
            with urllib.request.urlopen(request, timeout=10.0) as resp:
                for raw in resp:
                    line = raw.decode().strip()
                    if line.startswith("data: "):
                        self.envelopes.append(json.loads(line[len("data: "):]))
        except Exception:
            pass

    def wait_for(self, count: int, timeout_s: float = 5.0) -> list[dict]:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            if len(self.envelopes) >= count:
                return self.envelopes[:count]
            time.sleep(0.02)
        raise AssertionError(f"only {len(self.envelopes)} events, wanted {count}")


@pytest.fixture
def server():
    controller = Controller()
    with ControllerServer(controller) as srv:
        yield srv


class TestEndpoints:
    def test_post_valid_report_accepted(self, server):
        transport = HttpTransport(server.url)
        transport.submit_report(flood_report())
        assert len(server.controller.reports_in(TimeWindow(0, 10_000_000))) == 1

    def test_post_bad_report_400_names_field(self, server):
        broken = report_to_dict(flood_report())
        del broken["verdict"]
        body = json.dumps(broken).encode()
        request = urllib.request.Request(
            f"{server.url}/v1/reports", data=body,
            headers={"Content-Type": "application/json"}, method="POST")
        with pytest.raises(urllib.error.HTTPError) as e:
            urllib.request.urlopen(request)
        assert e.value.code == 400
        assert json.loads(e.value.read())["field"] == "verdict"

    def test_malformed_json_is_400(self, server):
        request = urllib.request.Request(
            f"{server.url}/v1/reports", data=b"{oops",
            headers={"Content-Type": "application/json"}, method="POST")
        with pytest.raises(urllib.error.HTTPError) as e:
            urllib.request.urlopen(request)
        assert e.value.code == 400

    def test_incidents_empty_before_traffic(self, server):
        assert get_json(f"{server.url}/v1/incidents") == []

    def test_incident_listing_and_detail(self, server):
        transport = HttpTransport(server.url)
        transport.submit_report(flood_report("192.168.1.4"))
        transport.submit_report(flood_report("192.168.1.6", report_id="agent-6-r1"))
        incidents = get_json(f"{server.url}/v1/incidents")
        assert len(incidents) == 1
        detail = get_json(f"{server.url}/v1/incidents/{incidents[0]['incident_id']}")
        assert detail["roles"]["192.168.1.1"] == "attacker"

    def test_unknown_incident_404(self, server):
        with pytest.raises(ApiError) as e:
            get_json(f"{server.url}/v1/incidents/inc-999")
        assert "404" in str(e.value)

    def test_heartbeat_and_nodes(self, server):
        transport = HttpTransport(server.url)
        now_us = server.clock_us()
        transport.submit_heartbeat(Heartbeat(
            agent_id="agent-4", address="192.168.1.4", at_us=now_us,
            cycles_completed=2, reports_sent=0, queue_depth=0,
        ))
        transport.submit_report(flood_report())
        nodes = get_json(f"{server.url}/v1/nodes")
        [node] = nodes
        assert node["agent_id"] == "agent-4"
        assert node["health"]["status"] == "healthy"
        assert node["latest_report"]["category"] == "dos_tcp_flood"

    def test_metrics_series_from_heartbeat_samples(self, server):
        from conftest import node as _
        from netsentry.model import TelemetrySample
        sample = TelemetrySample(
            node=NodeId("192.168.1.4", "agent-4"), at_us=1_000_000,
            latency_ms=274.0, jitter_ms=3.0, packet_loss_pct=4.7,
            throughput_kbps=1495.0,
        )
        HttpTransport(server.url).submit_heartbeat(Heartbeat(
            agent_id="agent-4", address="192.168.1.4", at_us=1_000_000,
            cycles_completed=1, reports_sent=0, queue_depth=0, sample=sample,
        ))
        series = get_json(f"{server.url}/v1/metrics/192.168.1.4")
        assert len(series) == 1
        assert series[0]["latency_ms"] == 274.0

    def test_chat_endpoint(self, server):
        transport = HttpTransport(server.url)
        transport.submit_report(flood_report("192.168.1.4"))
        transport.submit_report(flood_report("192.168.1.6", report_id="agent-6-r1"))
        answer = chat(server.url, "who is the attacker?")
        assert "192.168.1.1" in answer

    def test_unknown_endpoint_404(self, server):
        with pytest.raises(ApiError):
            get_json(f"{server.url}/v1/nope")


class TestEventStream:
    def test_events_validate_and_preserve_order(self, server):
        collector = EventCollector(server.url)
        transport = HttpTransport(server.url)
        first = flood_report("192.168.1.4", report_id="agent-4-r1")
        second = flood_report("192.168.1.6", report_id="agent-6-r1")
        transport.submit_report(first)
        transport.submit_report(second)
        events = collector.wait_for(3)
        for envelope in events:
            validate_envelope(envelope)
        report_events = [e for e in events if e["kind"] == "report"]
        assert [e["payload"]["report_id"] for e in report_events] == \
               ["agent-4-r1", "agent-6-r1"]
        incident_events = [e for e in events if e["kind"] == "incident"]
        assert incident_events, "incident event expected after second report"

    def test_chat_events_published(self, server):
        collector = EventCollector(server.url)
        chat(server.url, "status")
        events = collector.wait_for(2)
        kinds = [e["kind"] for e in events]
        assert kinds == ["chat_request", "chat_response"]
        for envelope in events:
            validate_envelope(envelope)

    def test_health_transition_published(self):
        controller = Controller()
        start = time.time_ns() // 1000
        with ControllerServer(controller) as server:
            collector = EventCollector(server.url)
            HttpTransport(server.url).submit_heartbeat(Heartbeat(
                agent_id="agent-9", address="192.168.1.9", at_us=start,
                cycles_completed=0, reports_sent=0, queue_depth=0,
                heartbeat_interval_s=0.4,
            ))
            # 0.4 s interval: healthy until 0.8 s, delayed until 1.6 s, then missing.
            deadline = time.monotonic() + 5.0
            while time.monotonic() < deadline:
                statuses = [e["payload"]["status"] for e in collector.envelopes
                            if e["kind"] == "health"]
                if "missing" in statuses:
                    break
                time.sleep(0.05)
            statuses = [e["payload"]["status"] for e in collector.envelopes
                        if e["kind"] == "health"]
            assert statuses[0] == "healthy"
            assert "missing" in statuses


class TestWireEnvelope:
    def test_unknown_kind_rejected(self):
        from netsentry.schema import SchemaError
        with pytest.raises(SchemaError):
            validate_envelope({"kind": "gossip", "payload": {}, "sent_at": 0,
                               "schema_version": "1"})

    def test_wrong_schema_version_rejected(self):
        from netsentry.schema import SchemaError
        with pytest.raises(SchemaError):
            validate_envelope({"kind": "chat_request", "payload": {"question": "x"},
                               "sent_at": 0, "schema_version": "2"})

    def test_bad_payload_rejected(self):
        from netsentry.schema import SchemaError
        with pytest.raises(SchemaError):
            validate_envelope({"kind": "report", "payload": {"report_id": 5},
                               "sent_at": 0, "schema_version": "1"})
