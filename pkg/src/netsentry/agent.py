"""
Node agent: the sense -> decide -> capture -> analyze -> remember -> report
loop, plus heartbeats.

One Agent owns all of its mutable state; packet acquisition and report
transport are injected so the same loop runs against the simulator, a
recorded trace, or a live capture tool. Failures never escape a cycle:
undeliverable reports go to a bounded retry queue, everything else is
counted and logged.
"""

from __future__ import annotations

import logging
import subprocess
import tempfile
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol as TypingProtocol

from .flows import extract_flows
from .llm import LlmConfig, analyze
from .model import (
    Analyzer,
    CaptureBounds,
    CaptureParams,
    Heartbeat,
    MemoryEntry,
    NodeId,
    PacketRecord,
    ThreatCategory,
    ThreatReport,
    ThresholdPolicy,
    TimeWindow,
    TriggerDecision,
)
from .pcap import read_pcap
from .rules import RuleThresholds
from .telemetry import MetricSource, evaluate, tune

log = logging.getLogger("netsentry.agent")

PLAN_CAPTURE = ("capture", "extract", "analyze", "report")


@dataclass
class AgentConfig:
    node: NodeId
    controller_url: str = ""
    policy: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    capture: CaptureParams = field(default_factory=CaptureParams)
    capture_bounds: CaptureBounds = field(default_factory=CaptureBounds)
    analyzer_mode: Analyzer = Analyzer.RULE
    rule_thresholds: RuleThresholds = field(default_factory=RuleThresholds)
    llm: LlmConfig | None = None
    heartbeat_interval_s: float = 5.0
    memory_capacity: int = 32
    report_queue_capacity: int = 100


class PacketSource(TypingProtocol):
    def capture(self, window: TimeWindow, max_packets: int) -> list[PacketRecord]: ...


class ReportTransport(TypingProtocol):
    def submit_report(self, report: ThreatReport) -> None: ...
    def submit_heartbeat(self, heartbeat: Heartbeat) -> None: ...


def plan(trigger: TriggerDecision, memory: list[MemoryEntry]) -> list[str]:
    """Next actions for one cycle.

    A fired trigger always captures. Otherwise three consecutive non-benign
    memory entries warrant a suspicion follow-up capture; anything else idles.
    """
    if trigger.fired:
        return list(PLAN_CAPTURE)
    recent = memory[-3:]
    if len(recent) == 3 and all(m.category is not ThreatCategory.BENIGN for m in recent):
        return list(PLAN_CAPTURE)
    return []


class Agent:
    def __init__(
        self,
        config: AgentConfig,
        metric_source: MetricSource,
        packet_source: PacketSource,
        transport: ReportTransport | None = None,
        capture_gate: Callable[[TimeWindow], None] | None = None,
        horizon_us: int | None = None,
    ):
        self.config = config
        self.metric_source = metric_source
        self.packet_source = packet_source
        self.transport = transport
        # Invoked before reading a capture window; live runs use it to wait
        # until the window has actually elapsed.
        self.capture_gate = capture_gate
        # Capture windows never extend past this time (simulation end).
        self.horizon_us = horizon_us

        self.capture_params = config.capture
        self.memory: deque[MemoryEntry] = deque(maxlen=config.memory_capacity)
        self.trigger_history: list[TriggerDecision] = []
        self.report_queue: deque[ThreatReport] = deque()
        self.last_trigger_at_us: int | None = None
        self.last_sample = None

        self.cycles_completed = 0
        self.reports_sent = 0
        self.reports_dropped = 0
        self.triggers_fired = 0
        self._report_seq = 0

    # -- reporting ----------------------------------------------------------

    def _next_report_id(self) -> str:
        self._report_seq += 1
        return f"{self.config.node.agent_id}-r{self._report_seq}"

    def _enqueue(self, report: ThreatReport) -> None:
        if len(self.report_queue) >= self.config.report_queue_capacity:
            dropped = self.report_queue.popleft()
            self.reports_dropped += 1
            log.warning("report queue full, dropped %s", dropped.report_id)
        self.report_queue.append(report)

    def _flush_reports(self) -> None:
        while self.report_queue:
            report = self.report_queue[0]
            try:
                if self.transport is None:
                    raise ConnectionError("no transport configured")
                self.transport.submit_report(report)
            except Exception as e:
                log.debug("report submission failed, will retry: %s", e)
                return
            self.report_queue.popleft()
            self.reports_sent += 1

    def run_capture(self, window: TimeWindow, trigger: TriggerDecision) -> ThreatReport:
        """Capture + extract + analyze + report for one window.

        Used by the trigger path and directly by the simulation harness
        for scheduled sweep captures.
        """
        if self.capture_gate is not None:
            self.capture_gate(window)
        records = self.packet_source.capture(window, self.capture_params.max_packets)
        flows = extract_flows(records, window)
        digest = "; ".join(m.one_line for m in list(self.memory)[-5:])
        verdict, summary = analyze(
            flows, trigger, digest,
            mode=self.config.analyzer_mode,
            llm=self.config.llm,
            thresholds=self.config.rule_thresholds,
        )
        report = ThreatReport(
            report_id=self._next_report_id(),
            node=self.config.node,
            window=window,
            trigger=trigger,
            packet_count=len(records),
            byte_count=sum(r.length_bytes for r in records),
            top_flows=flows[:20],
            verdict=verdict,
            summary_text=summary,
            created_at_us=window.end_us,
        )
        self.memory.append(MemoryEntry(
            at_us=window.end_us, category=verdict.category,
            one_line=f"{verdict.category.value} ({verdict.confidence:.2f}) at {window.end_us}us",
        ))
        self._enqueue(report)
        self._flush_reports()
        return report

    # -- the loop -----------------------------------------------------------

    def run_cycle(self, now_us: int) -> ThreatReport | None:
        """One full agent cycle at time now_us. Never raises."""
        report = None
        try:
            sample = self.metric_source.sample(self.config.node, now_us)
            self.last_sample = sample
            trigger = evaluate(sample, self.config.policy, self.last_trigger_at_us)
            if trigger.fired:
                self.triggers_fired += 1
                self.last_trigger_at_us = now_us

            if plan(trigger, list(self.memory)):
                end_us = now_us + int(self.capture_params.duration_s * 1e6)
                if self.horizon_us is not None:
                    end_us = min(end_us, self.horizon_us)
                report = self.run_capture(TimeWindow(now_us, end_us), trigger)
            else:
                self._flush_reports()

            self.trigger_history.append(trigger)
            self.capture_params = tune(
                self.trigger_history, self.capture_params, self.config.capture_bounds
            )
        except Exception:
            log.exception("agent cycle failed at %dus", now_us)
        self.cycles_completed += 1
        return report

    def heartbeat(self, now_us: int) -> Heartbeat:
        hb = Heartbeat(
            agent_id=self.config.node.agent_id,
            address=self.config.node.address,
            at_us=now_us,
            cycles_completed=self.cycles_completed,
            reports_sent=self.reports_sent,
            queue_depth=len(self.report_queue),
            heartbeat_interval_s=self.config.heartbeat_interval_s,
            sample=self.last_sample,
        )
        if self.transport is not None:
            try:
                self.transport.submit_heartbeat(hb)
            except Exception as e:
                log.debug("heartbeat dropped: %s", e)
        return hb


class ExternalCaptureSource:
    """Live packet acquisition: run an external capture tool that writes a
    pcap file, then ingest it. Keeps the framework free of raw-socket
    privileges.

    The command template may reference {out} (pcap path), {duration}
    (seconds), and {max_packets}.
    """

    def __init__(self, command_template: str, workdir: str | None = None):
        self.command_template = command_template
        self.workdir = workdir

    def capture(self, window: TimeWindow, max_packets: int) -> list[PacketRecord]:
        duration = max(window.length_s(), 0.001)
        with tempfile.TemporaryDirectory(dir=self.workdir) as tmp:
            out = Path(tmp) / "capture.pcap"
            command = self.command_template.format(
                out=out, duration=duration, max_packets=max_packets
            )
            try:
                subprocess.run(command, shell=True, check=True,
                               timeout=duration + 30.0, capture_output=True)
            except (subprocess.SubprocessError, OSError) as e:
                log.error("capture tool failed: %s", e)
                return []
            if not out.exists():
                return []
            return read_pcap(out).records[:max_packets]
