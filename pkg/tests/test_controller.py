"""Controller: ingest, correlation roles, intent, subtasks, health, chat."""

from __future__ import annotations

import pytest

from conftest import make_trigger, make_verdict
from netsentry.controller import Controller, CorrelationConfig, MemoryConfig
from netsentry.model import (
    FlowFeatures,
    FlowKey,
    HealthStatus,
    Heartbeat,
    NodeId,
    Protocol,
    Role,
    ThreatCategory,
    ThreatReport,
    TimeWindow,
)

WINDOW = TimeWindow(2_000_000, 7_000_000)
HORIZON = TimeWindow(0, 60_000_000)


def flow(src, dst, pps, protocol=Protocol.TCP, syn_ratio=1.0, ports=1) -> FlowFeatures:
    packets = max(int(pps * WINDOW.length_s()), 1)
    return FlowFeatures(
        key=FlowKey(src, dst, protocol), window=WINDOW,
        packet_count=packets, byte_count=packets * 512,
        pps=pps, bps=pps * 512 * 8,
        syn_count=int(packets * syn_ratio) if protocol is Protocol.TCP else 0,
        synack_count=0,
        distinct_dst_ports=min(ports, packets),
        mean_iat_ms=1.0, stddev_iat_ms=0.1,
    )


def report(address, flows, category, report_id=None, agent=None) -> ThreatReport:
    agent = agent or f"agent-{address.rsplit('.', 1)[1]}"
    return ThreatReport(
        report_id=report_id or f"{agent}-r1",
        node=NodeId(address=address, agent_id=agent),
        window=WINDOW,
        trigger=make_trigger(category is not ThreatCategory.BENIGN),
        packet_count=sum(f.packet_count for f in flows),
        byte_count=sum(f.byte_count for f in flows),
        top_flows=flows,
        verdict=make_verdict(category),
        summary_text=f"{category.value} seen at {address}",
        created_at_us=WINDOW.end_us,
    )


def ddos_reports() -> list[ThreatReport]:
    """The attacker and both victims each report the flood they observe."""
    return [
        report("192.168.1.1", [flow("192.168.1.1", "192.168.1.4", 610.0),
                               flow("192.168.1.1", "192.168.1.6", 610.0)],
               ThreatCategory.DOS_TCP_FLOOD),
        report("192.168.1.4", [flow("192.168.1.1", "192.168.1.4", 366.0)],
               ThreatCategory.DOS_TCP_FLOOD),
        report("192.168.1.6", [flow("192.168.1.1", "192.168.1.6", 366.0)],
               ThreatCategory.DOS_TCP_FLOOD),
        report("192.168.1.2", [flow("192.168.1.2", "192.168.1.3", 1.0),
                               flow("192.168.1.3", "192.168.1.2", 1.0)],
               ThreatCategory.BENIGN),
    ]


class TestIngest:
    def test_first_report_accepted(self):
        c = Controller()
        ack = c.ingest(ddos_reports()[0])
        assert ack.accepted and not ack.duplicate
        assert len(c.reports_in(HORIZON)) == 1

    def test_duplicate_id_idempotent(self):
        c = Controller()
        r = ddos_reports()[0]
        c.ingest(r)
        ack = c.ingest(r)
        assert ack.accepted and ack.duplicate
        assert len(c.reports_in(HORIZON)) == 1

    def test_multiset_equals_dedup_set(self):
        reports = ddos_reports()
        c1 = Controller()
        for r in reports + reports + [reports[0]]:
            c1.ingest(r)
        c2 = Controller()
        for r in reports:
            c2.ingest(r)
        assert [r.report_id for r in c1.reports_in(HORIZON)] == \
               [r.report_id for r in c2.reports_in(HORIZON)]
        assert len(c1.incidents()) == len(c2.incidents())

    def test_same_window_reports_share_bucket(self):
        c = Controller()
        buckets = {c.bucket_of(r.window) for r in ddos_reports()}
        assert len(buckets) == 1


class TestCorrelate:
    def test_ddos_roles(self):
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        [incident] = c.correlate(HORIZON)
        assert incident.category is ThreatCategory.DOS_TCP_FLOOD
        assert incident.roles["192.168.1.1"] is Role.ATTACKER
        assert incident.roles["192.168.1.4"] is Role.VICTIM
        assert incident.roles["192.168.1.6"] is Role.VICTIM
        for addr in ("192.168.1.2", "192.168.1.3", "192.168.1.5"):
            assert incident.roles.get(addr, Role.NORMAL) is Role.NORMAL
        assert len(incident.supporting_reports) == 3

    def test_single_benign_report_no_incident(self):
        c = Controller()
        c.ingest(ddos_reports()[3])
        assert c.correlate(HORIZON) == []

    def test_recon_distributed(self):
        c = Controller()
        scan1 = report("10.0.0.10", [flow("10.0.0.10", "10.0.0.20", 5.0, ports=60)],
                       ThreatCategory.PORT_SCAN)
        scan2 = report("10.0.0.11", [flow("10.0.0.11", "10.0.0.20", 4.0, ports=55)],
                       ThreatCategory.PORT_SCAN)
        c.ingest(scan1)
        c.ingest(scan2)
        [incident] = c.correlate(HORIZON)
        assert incident.category is ThreatCategory.RECON_DISTRIBUTED
        assert incident.roles["10.0.0.10"] is Role.SCANNER
        assert incident.roles["10.0.0.11"] is Role.SCANNER
        assert incident.roles["10.0.0.20"] is Role.NORMAL

    def test_single_scanner_stays_port_scan(self):
        c = Controller()
        c.ingest(report("10.0.0.10", [flow("10.0.0.10", "10.0.0.20", 5.0, ports=60)],
                        ThreatCategory.PORT_SCAN))
        [incident] = c.correlate(HORIZON)
        assert incident.category is ThreatCategory.PORT_SCAN

    def test_role_exclusivity(self):
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        for incident in c.correlate(HORIZON):
            for role in incident.roles.values():
                assert role in Role

    def test_correlate_pure_and_repeatable(self):
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        a = c.correlate(HORIZON)
        b = c.correlate(HORIZON)
        assert len(a) == len(b) == 1
        assert a[0].roles == b[0].roles
        assert a[0].supporting_reports == b[0].supporting_reports

    def test_confidence_is_mean_of_supporting(self):
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        [incident] = c.correlate(HORIZON)
        assert incident.confidence == pytest.approx(1.0)

    def test_asymmetry_guard_blocks_chatty_pairs(self):
        # Symmetric high-volume exchange: no roles, no incident.
        c = Controller()
        c.ingest(report("10.0.0.1", [flow("10.0.0.1", "10.0.0.2", 400.0, syn_ratio=0.0),
                                     flow("10.0.0.2", "10.0.0.1", 390.0, syn_ratio=0.0)],
                        ThreatCategory.BENIGN))
        assert c.correlate(HORIZON) == []


class TestIntentAndBreakdown:
    def test_ddos_intent_names_victims(self):
        c = Controller()
        digest = c.extract_intent(ddos_reports())
        assert "service disruption" in digest
        assert "192.168.1.4" in digest and "192.168.1.6" in digest

    def test_empty_intent(self):
        assert Controller().extract_intent([]) == ""

    def test_scan_intent_is_reconnaissance(self):
        c = Controller()
        scan = report("10.0.0.10", [flow("10.0.0.10", "10.0.0.20", 5.0, ports=60)],
                      ThreatCategory.PORT_SCAN)
        assert "reconnaissance" in c.extract_intent([scan])
        assert "10.0.0.20" in c.extract_intent([scan])

    def test_ddos_breakdown_counts(self):
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        [incident] = c.correlate(HORIZON)
        subtasks = c.breakdown(incident)
        kinds = [s.kind for s in subtasks]
        assert kinds.count("verify") == 2
        assert kinds.count("observe") == 1
        assert kinds.count("report") == 1
        assert all(s.advisory for s in subtasks)

    def test_scanner_only_breakdown(self):
        c = Controller()
        c.ingest(report("10.0.0.10", [flow("10.0.0.10", "10.0.0.20", 5.0, ports=60)],
                        ThreatCategory.PORT_SCAN))
        [incident] = c.correlate(HORIZON)
        kinds = [s.kind for s in c.breakdown(incident)]
        assert kinds.count("observe") == 1 and kinds.count("report") == 1
        assert kinds.count("verify") == 0

    def test_recommendation_is_advisory_only(self):
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        [incident] = c.incidents()
        assert incident.recommendation.urgency.value == "high"
        for action in incident.recommendation.advisory_actions:
            assert isinstance(action, str)


class TestHealth:
    INTERVAL_S = 5.0

    def make(self) -> Controller:
        c = Controller()
        c.ingest_heartbeat(Heartbeat(
            agent_id="agent-1", address="10.0.0.1", at_us=0,
            cycles_completed=0, reports_sent=0, queue_depth=0,
            heartbeat_interval_s=self.INTERVAL_S,
        ))
        return c

    def status_at(self, controller, seconds) -> HealthStatus:
        [health] = controller.monitor_agents(int(seconds * 1e6))
        return health.status

    def test_one_interval_healthy(self):
        assert self.status_at(self.make(), 5.0) is HealthStatus.HEALTHY

    def test_exactly_two_intervals_healthy(self):
        assert self.status_at(self.make(), 10.0) is HealthStatus.HEALTHY

    def test_three_intervals_delayed(self):
        assert self.status_at(self.make(), 15.0) is HealthStatus.DELAYED

    def test_exactly_four_intervals_delayed(self):
        assert self.status_at(self.make(), 20.0) is HealthStatus.DELAYED

    def test_beyond_four_intervals_missing(self):
        assert self.status_at(self.make(), 20.000001) is HealthStatus.MISSING

    def test_ten_intervals_missing(self):
        assert self.status_at(self.make(), 50.0) is HealthStatus.MISSING


class TestMemory:
    def test_retention_eviction(self):
        c = Controller(memory=MemoryConfig(capacity=512, retention_s=600.0))
        c._remember(0, "old entry")
        c._remember(601_000_000, "new entry")
        assert [d for _, d in c.memory] == ["new entry"]

    def test_capacity_eviction(self):
        c = Controller(memory=MemoryConfig(capacity=3, retention_s=600.0))
        for i in range(5):
            c._remember(i, f"entry {i}")
        assert len(c.memory) == 3
        assert [d for _, d in c.memory] == ["entry 2", "entry 3", "entry 4"]


class TestAnswerQuery:
    def loaded(self) -> Controller:
        c = Controller()
        for r in ddos_reports():
            c.ingest(r)
        c.ingest_heartbeat(Heartbeat(
            agent_id="agent-1", address="192.168.1.1", at_us=WINDOW.end_us,
            cycles_completed=3, reports_sent=1, queue_depth=0,
        ))
        return c

    def test_attacker_query(self):
        answer = self.loaded().answer_query("who is the attacker?")
        assert "192.168.1.1" in answer

    def test_status_query_all_healthy(self):
        answer = self.loaded().answer_query("status", now_us=WINDOW.end_us)
        assert "healthy" in answer

    def test_ip_literal_query(self):
        answer = self.loaded().answer_query("what happened on 192.168.1.4?")
        assert "dos_tcp_flood" in answer

    def test_incident_query(self):
        answer = self.loaded().answer_query("any open incidents?")
        assert "dos_tcp_flood" in answer and "inc-" in answer

    def test_unknown_without_llm(self):
        answer = self.loaded().answer_query("what's the weather")
        assert "cannot answer" in answer.lower()

    def test_attacker_query_without_incidents(self):
        assert "No incidents" in Controller().answer_query("attacker?")
