"""
Central controller: aggregates agent reports, correlates cross-node
behavior into incidents with attacker/victim/scanner roles, watches agent
health, and answers operator queries.

The controller is advisory-only: it never emits anything that mutates an
agent's configuration. All state mutation is serialized through one lock;
correlate() always runs on a snapshot.
"""

from __future__ import annotations

import logging
import re
import threading
from collections import deque
from dataclasses import dataclass, field

from .llm import HttpLlmClient, LlmConfig, TransportError
from .schema import heartbeat_to_dict, incident_to_dict
from .model import (
    AgentHealth,
    CATEGORY_SEVERITY,
    HealthStatus,
    Heartbeat,
    Incident,
    PolicyRecommendation,
    Role,
    Subtask,
    TelemetrySample,
    ThreatCategory,
    ThreatReport,
    TimeWindow,
    Urgency,
)

log = logging.getLogger("netsentry.controller")

_IPV4_RE = re.compile(r"\b(\d{1,3}(?:\.\d{1,3}){3})\b")

# Ratio denominators are floored at this pps to keep asymmetry finite.
EPSILON_PPS = 0.001


@dataclass
class CorrelationConfig:
    attack_pps_min: float = 200.0
    asymmetry_min: float = 5.0
    bucket_s: float = 10.0

    def __post_init__(self) -> None:
        if self.asymmetry_min <= 1.0:
            raise ValueError("asymmetry_min must exceed 1 (role exclusivity)")


@dataclass
class MemoryConfig:
    capacity: int = 512
    retention_s: float = 600.0


@dataclass
class IngestAck:
    accepted: bool
    duplicate: bool = False
    reason: str = ""


class Controller:
    def __init__(
        self,
        correlation: CorrelationConfig | None = None,
        memory: MemoryConfig | None = None,
        llm: LlmConfig | None = None,
        heartbeat_interval_default_s: float = 5.0,
    ):
        self.correlation = correlation or CorrelationConfig()
        self.memory_config = memory or MemoryConfig()
        self.llm = llm
        self.heartbeat_interval_default_s = heartbeat_interval_default_s

        self._lock = threading.RLock()
        self._reports: dict[str, ThreatReport] = {}
        self._order: list[str] = []
        # (address, window bucket, category) -> report ids
        self._index: dict[tuple[str, int, str], list[str]] = {}
        self._heartbeats: dict[str, Heartbeat] = {}
        self._samples: dict[str, deque[TelemetrySample]] = {}
        self.memory: deque[tuple[int, str]] = deque()
        self._incidents: dict[str, Incident] = {}
        self._incident_seq = 0
        self._listeners: list = []

    # -- event bus ----------------------------------------------------------

    def add_listener(self, callback) -> None:
        """callback(kind: str, payload: dict) on every ingest-order event."""
        with self._lock:
            self._listeners.append(callback)

    def _emit(self, kind: str, payload: dict) -> None:
        for callback in list(self._listeners):
            try:
                callback(kind, payload)
            except Exception:
                log.exception("event listener failed")

    # -- ingest -------------------------------------------------------------

    def bucket_of(self, window: TimeWindow) -> int:
        return int(window.start_us // int(self.correlation.bucket_s * 1e6))

    def ingest(self, report: ThreatReport) -> IngestAck:
        """Store one validated report, idempotent on report_id."""
        with self._lock:
            if report.report_id in self._reports:
                return IngestAck(accepted=True, duplicate=True)
            self._reports[report.report_id] = report
            self._order.append(report.report_id)
            key = (report.node.address, self.bucket_of(report.window),
                   report.verdict.category.value)
            self._index.setdefault(key, []).append(report.report_id)
            self._remember(report.created_at_us,
                           f"report {report.report_id}: {report.node.address} "
                           f"{report.verdict.category.value}")
            digest = self.report_digest(report)
        self._emit("report", digest)
        self._refresh_incidents(now_us=report.created_at_us)
        return IngestAck(accepted=True)

    def ingest_heartbeat(self, heartbeat: Heartbeat) -> IngestAck:
        with self._lock:
            previous = self._heartbeats.get(heartbeat.agent_id)
            stale = previous is not None and previous.at_us > heartbeat.at_us
            if not stale:
                self._heartbeats[heartbeat.agent_id] = heartbeat
            if heartbeat.sample is not None:
                self.record_sample(heartbeat.sample)
        self._emit("heartbeat", heartbeat_to_dict(heartbeat))
        return IngestAck(accepted=True)

    def record_sample(self, sample: TelemetrySample) -> None:
        series = self._samples.setdefault(sample.node.address, deque(maxlen=600))
        series.append(sample)

    def _remember(self, at_us: int, digest: str) -> None:
        self.memory.append((at_us, digest))
        self.maintain_memory(at_us)

    def maintain_memory(self, now_us: int) -> None:
        """Evict memory entries beyond capacity or the retention window."""
        retention_us = int(self.memory_config.retention_s * 1e6)
        while self.memory and self.memory[0][0] < now_us - retention_us:
            self.memory.popleft()
        while len(self.memory) > self.memory_config.capacity:
            self.memory.popleft()

    # -- correlation --------------------------------------------------------

    def reports_in(self, window: TimeWindow) -> list[ThreatReport]:
        with self._lock:
            return [
                self._reports[rid] for rid in self._order
                if _overlaps(self._reports[rid].window, window)
            ]

    def correlate(self, window: TimeWindow) -> list[Incident]:
        """Pure correlation over the in-window reports snapshot.

        Per-address directional pps totals are summed over every report's
        flows; roles follow from volume plus asymmetry; one incident per
        connected component of the attacker->victim (and scanner->target)
        graph.
        """
        reports = self.reports_in(window)
        if not reports:
            return []
        cfg = self.correlation

        out_pps: dict[str, float] = {}
        in_pps: dict[str, float] = {}
        edges: set[tuple[str, str]] = set()
        scanners: set[str] = set()
        scan_targets: dict[str, set[str]] = {}
        flows_by_src: dict[str, set[str]] = {}
        mentions: dict[str, set[str]] = {}

        for report in reports:
            for flow in report.top_flows:
                src, dst = flow.key.src, flow.key.dst
                out_pps[src] = out_pps.get(src, 0.0) + flow.pps
                in_pps[dst] = in_pps.get(dst, 0.0) + flow.pps
                flows_by_src.setdefault(src, set()).add(dst)
                mentions.setdefault(src, set()).add(report.report_id)
                mentions.setdefault(dst, set()).add(report.report_id)
            if report.verdict.category is ThreatCategory.PORT_SCAN:
                for flow in report.top_flows:
                    scanners.add(flow.key.src)
                    scan_targets.setdefault(flow.key.src, set()).add(flow.key.dst)

        roles: dict[str, Role] = {}
        for address in set(out_pps) | set(in_pps):
            out_v = out_pps.get(address, 0.0)
            in_v = in_pps.get(address, 0.0)
            if out_v >= cfg.attack_pps_min and out_v / max(in_v, EPSILON_PPS) >= cfg.asymmetry_min:
                roles[address] = Role.ATTACKER
            elif in_v >= cfg.attack_pps_min and in_v / max(out_v, EPSILON_PPS) >= cfg.asymmetry_min:
                roles[address] = Role.VICTIM
            elif address in scanners:
                roles[address] = Role.SCANNER
            else:
                roles[address] = Role.NORMAL
        # An address can never satisfy both asymmetry tests; assert it.
        assert not any(
            out_pps.get(a, 0.0) / max(in_pps.get(a, 0.0), EPSILON_PPS) >= cfg.asymmetry_min
            and in_pps.get(a, 0.0) / max(out_pps.get(a, 0.0), EPSILON_PPS) >= cfg.asymmetry_min
            and out_pps.get(a, 0.0) >= cfg.attack_pps_min
            and in_pps.get(a, 0.0) >= cfg.attack_pps_min
            for a in roles
        ), "role exclusivity violated"

        for src, dsts in flows_by_src.items():
            if roles.get(src) is Role.ATTACKER:
                edges.update((src, d) for d in dsts if roles.get(d) is Role.VICTIM)
        for scanner, targets in scan_targets.items():
            if roles.get(scanner) in (Role.SCANNER, Role.ATTACKER):
                edges.update((scanner, t) for t in targets)

        components = _connected_components(edges)
        incidents = []
        for component in components:
            incidents.append(self._build_incident(component, roles, reports, window,
                                                  scanners, scan_targets))
        incidents.sort(key=lambda i: (-CATEGORY_SEVERITY[i.category], i.window.start_us))
        return incidents

    def _build_incident(
        self,
        component: set[str],
        roles: dict[str, Role],
        reports: list[ThreatReport],
        window: TimeWindow,
        scanners: set[str],
        scan_targets: dict[str, set[str]],
    ) -> Incident:
        supporting = [
            r for r in reports
            if any(f.key.src in component or f.key.dst in component for f in r.top_flows)
        ]
        component_roles = {a: roles.get(a, Role.NORMAL) for a in sorted(component)}

        # Dominant category across supporting verdicts, pps-weighted on ties.
        tally: dict[ThreatCategory, tuple[int, float]] = {}
        for r in supporting:
            count, pps = tally.get(r.verdict.category, (0, 0.0))
            tally[r.verdict.category] = (count + 1, pps + sum(f.pps for f in r.top_flows))
        category = max(tally, key=lambda c: tally[c])

        component_scanners = {s for s in scanners if s in component}
        if len(component_scanners) >= 2:
            target_sets = [frozenset(scan_targets[s]) for s in component_scanners]
            if len(set(target_sets)) == 1:
                category = ThreatCategory.RECON_DISTRIBUTED

        confidence = sum(r.verdict.confidence for r in supporting) / len(supporting)
        start = min(r.window.start_us for r in supporting)
        end = max(r.window.end_us for r in supporting)
        incident_window = TimeWindow(start, end)

        attackers = sorted(a for a, r in component_roles.items() if r is Role.ATTACKER)
        victims = sorted(a for a, r in component_roles.items() if r is Role.VICTIM)
        scanners_here = sorted(a for a, r in component_roles.items() if r is Role.SCANNER)

        actions = []
        for a in attackers:
            actions.append(f"rate-limit source {a} at its access switch")
        for s in scanners_here:
            actions.append(f"rate-limit source {s} at its access switch")
        for v in victims:
            actions.append(f"increase capture duration on {v}")
        if not actions:
            actions.append("increase monitoring coverage across involved nodes")
        urgency = (
            Urgency.HIGH if category in (ThreatCategory.DOS_TCP_FLOOD, ThreatCategory.DOS_UDP_FLOOD)
            else Urgency.MEDIUM if category in (ThreatCategory.PORT_SCAN, ThreatCategory.RECON_DISTRIBUTED)
            else Urgency.LOW
        )

        narrative = self.extract_intent(supporting)
        return Incident(
            incident_id="pending",
            window=incident_window,
            category=category,
            confidence=min(confidence, 1.0),
            roles=component_roles,
            supporting_reports=[r.report_id for r in supporting],
            recommendation=PolicyRecommendation(advisory_actions=actions, urgency=urgency),
            narrative=narrative,
        )

    def _refresh_incidents(self, now_us: int) -> None:
        """Re-correlate over the retention horizon and publish new or updated
        incidents. Identity follows the involved principals: a fresh incident
        sharing any non-normal address with a known one is that incident,
        updated (components that merge collapse onto the oldest id)."""
        horizon = TimeWindow(
            max(0, now_us - int(self.memory_config.retention_s * 1e6)),
            now_us + 1,
        )
        try:
            fresh = self.correlate(horizon)
        except Exception:
            log.exception("correlation failed")
            return
        with self._lock:
            for incident in fresh:
                principals = {a for a, r in incident.roles.items() if r is not Role.NORMAL}
                matches = sorted(
                    (known_id for known_id, known in self._incidents.items()
                     if principals & {a for a, r in known.roles.items()
                                      if r is not Role.NORMAL}),
                    key=lambda i: int(i.rsplit("-", 1)[1]),
                )
                if not matches:
                    self._incident_seq += 1
                    incident.incident_id = f"inc-{self._incident_seq}"
                    self._incidents[incident.incident_id] = incident
                    self._remember(now_us, f"incident {incident.incident_id}: "
                                           f"{incident.category.value}")
                    self._emit_incident(incident)
                    continue
                keep = matches[0]
                for absorbed in matches[1:]:
                    del self._incidents[absorbed]
                incident.incident_id = keep
                previous = self._incidents[keep]
                changed = (previous.roles != incident.roles
                           or previous.category != incident.category
                           or len(previous.supporting_reports) != len(incident.supporting_reports))
                self._incidents[keep] = incident
                if changed:
                    self._emit_incident(incident)

    def _emit_incident(self, incident: Incident) -> None:
        self._emit("incident", incident_to_dict(incident))

    def incidents(self) -> list[Incident]:
        with self._lock:
            return sorted(self._incidents.values(),
                          key=lambda i: int(i.incident_id.rsplit("-", 1)[1]))

    def incident_by_id(self, incident_id: str) -> Incident | None:
        with self._lock:
            return self._incidents.get(incident_id)

    # -- intent and subtasks --------------------------------------------------

    def extract_intent(self, reports: list[ThreatReport]) -> str:
        """Deterministic objective digest over a report set; LLM rewrite is
        optional and falls back to the template."""
        if not reports:
            return ""
        template = self._intent_template(reports)
        if self.llm is None:
            return template
        try:
            text = HttpLlmClient(self.llm).complete(
                "Rewrite this network incident digest in one sentence, keeping "
                f"every IP address: {template}"
            )
            return text.strip() or template
        except TransportError:
            return template

    def _intent_template(self, reports: list[ThreatReport]) -> str:
        categories = {r.verdict.category for r in reports}
        start = min(r.window.start_us for r in reports)
        end = max(r.window.end_us for r in reports)
        span = f"between {start}us and {end}us"

        dos_cats = {ThreatCategory.DOS_TCP_FLOOD, ThreatCategory.DOS_UDP_FLOOD}
        if categories & dos_cats:
            targets = sorted({
                f.key.dst for r in reports for f in r.top_flows
                if r.verdict.category in dos_cats and f.pps >= self.correlation.attack_pps_min
            })
            target_text = ", ".join(targets) if targets else "unidentified nodes"
            return (f"Suspected objective: service disruption targeting "
                    f"{target_text} {span}.")
        scan_cats = {ThreatCategory.PORT_SCAN, ThreatCategory.RECON_DISTRIBUTED}
        if categories & scan_cats:
            targets = sorted({
                f.key.dst for r in reports for f in r.top_flows
                if r.verdict.category in scan_cats
            })
            target_text = ", ".join(targets) if targets else "unidentified nodes"
            return (f"Suspected objective: reconnaissance of {target_text} {span}.")
        if categories == {ThreatCategory.BENIGN}:
            return f"No hostile objective inferred; traffic normal {span}."
        return f"Suspected objective: undetermined anomalous activity {span}."

    def breakdown(self, incident: Incident) -> list[Subtask]:
        """Advisory subtasks: verify each victim, observe each attacker or
        scanner, publish the incident."""
        subtasks = []
        for address, role in sorted(incident.roles.items()):
            if role is Role.VICTIM:
                subtasks.append(Subtask(
                    kind="verify", target=address,
                    note=f"recommend raising capture duration on {address}",
                ))
            elif role in (Role.ATTACKER, Role.SCANNER):
                subtasks.append(Subtask(
                    kind="observe", target=address,
                    note=f"recommend lowering sample_interval_s on {address}",
                ))
        subtasks.append(Subtask(
            kind="report", target="dashboard",
            note=f"publish incident {incident.incident_id}",
        ))
        return subtasks

    # -- health ---------------------------------------------------------------

    def monitor_agents(self, now_us: int) -> list[AgentHealth]:
        with self._lock:
            heartbeats = list(self._heartbeats.values())
        out = []
        for hb in heartbeats:
            interval_us = int((hb.heartbeat_interval_s or
                               self.heartbeat_interval_default_s) * 1e6)
            silent_for = now_us - hb.at_us
            if silent_for > 4 * interval_us:
                status = HealthStatus.MISSING
            elif silent_for > 2 * interval_us:
                status = HealthStatus.DELAYED
            else:
                status = HealthStatus.HEALTHY
            out.append(AgentHealth(agent_id=hb.agent_id,
                                   last_heartbeat_at_us=hb.at_us, status=status))
        out.sort(key=lambda h: h.agent_id)
        return out

    # -- operator queries -------------------------------------------------------

    def latest_report_for(self, address: str) -> ThreatReport | None:
        with self._lock:
            for rid in reversed(self._order):
                if self._reports[rid].node.address == address:
                    return self._reports[rid]
        return None

    def samples_for(self, address: str) -> list[TelemetrySample]:
        with self._lock:
            return list(self._samples.get(address, ()))

    def answer_query(self, question: str, now_us: int | None = None) -> str:
        """Keyword-routed operator chat with optional LLM catch-all."""
        q = question.lower()
        now = now_us if now_us is not None else self._latest_time()

        if "attacker" in q or "attacking" in q:
            incidents = self.incidents()
            if not incidents:
                return "No incidents recorded; no attacker identified."
            latest = incidents[-1]
            attackers = sorted(a for a, r in latest.roles.items()
                               if r in (Role.ATTACKER, Role.SCANNER))
            if not attackers:
                return (f"Most recent incident {latest.incident_id} has no "
                        f"attacker role assigned.")
            victims = sorted(a for a, r in latest.roles.items() if r is Role.VICTIM)
            text = f"Attacker: {', '.join(attackers)} ({latest.category.value})"
            if victims:
                text += f"; victims: {', '.join(victims)}"
            return text + f" [incident {latest.incident_id}]."

        if "status" in q or "health" in q:
            health = self.monitor_agents(now)
            if not health:
                return "No agents have reported yet."
            parts = [f"{h.agent_id}: {h.status.value}" for h in health]
            summary = "all agents healthy" if all(
                h.status is HealthStatus.HEALTHY for h in health
            ) else "degraded"
            return f"Agent status ({summary}): " + "; ".join(parts)

        ip_match = _IPV4_RE.search(question)
        if ip_match:
            address = ip_match.group(1)
            report = self.latest_report_for(address)
            if report is None:
                return f"No reports from {address}."
            return (
                f"{address} latest report {report.report_id}: "
                f"{report.verdict.category.value} "
                f"(confidence {report.verdict.confidence:.2f}), "
                f"{report.packet_count} packets in window "
                f"[{report.window.start_us}, {report.window.end_us}]us. "
                f"{report.summary_text}"
            )

        if "alert" in q or "incident" in q:
            incidents = self.incidents()
            if not incidents:
                return "No open incidents."
            lines = [
                f"{i.incident_id}: {i.category.value} roles "
                + ", ".join(f"{a}={r.value}" for a, r in sorted(i.roles.items()))
                for i in incidents
            ]
            return "Open incidents: " + " | ".join(lines)

        if self.llm is not None:
            digest = self._state_digest()
            try:
                return HttpLlmClient(self.llm).complete(
                    f"Operator question: {question}\nSystem state: {digest}\n"
                    "Answer in one short paragraph."
                )
            except TransportError:
                pass
        return (
            "I cannot answer that. Supported queries: who is the attacker; "
            "status/health; an IPv4 address for that node's latest report; "
            "alerts/incidents."
        )

    def report_digest(self, report: ThreatReport) -> dict:
        trigger = report.trigger
        return {
            "report_id": report.report_id,
            "node": report.node.address,
            "category": report.verdict.category.value,
            "confidence": report.verdict.confidence,
            "packet_count": report.packet_count,
            "window": {"start_us": report.window.start_us, "end_us": report.window.end_us},
            "trigger": {
                "fired": trigger.fired,
                "breached_metric": trigger.breached_metric.value if trigger.breached_metric else None,
                "observed": trigger.observed,
                "threshold": trigger.threshold,
            },
            "summary": report.summary_text,
        }

    def _state_digest(self) -> str:
        with self._lock:
            reports = len(self._reports)
            agents = sorted(self._heartbeats)
            incidents = [f"{i.incident_id}:{i.category.value}" for i in self._incidents.values()]
        return (f"{reports} reports from agents {agents}; "
                f"incidents: {incidents or 'none'}")

    def _latest_time(self) -> int:
        with self._lock:
            times = [h.at_us for h in self._heartbeats.values()]
            times += [self._reports[r].created_at_us for r in self._order[-5:]]
        return max(times, default=0)


def _overlaps(a: TimeWindow, b: TimeWindow) -> bool:
    return a.start_us <= b.end_us and b.start_us <= a.end_us


def _connected_components(edges: set[tuple[str, str]]) -> list[set[str]]:
    neighbors: dict[str, set[str]] = {}
    for u, v in edges:
        neighbors.setdefault(u, set()).add(v)
        neighbors.setdefault(v, set()).add(u)
    seen: set[str] = set()
    components = []
    for start in sorted(neighbors):
        if start in seen:
            continue
        stack = [start]
        component = set()
        while stack:
            node = stack.pop()
            if node in component:
                continue
            component.add(node)
            stack.extend(neighbors[node] - component)
        seen |= component
        components.append(component)
    return components
