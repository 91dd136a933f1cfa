"""
Embeds node agents and a controller into a simulated run.

The data plane is fully precomputed (agents only observe, never inject),
so the same trace drives two execution styles:

  offline — every agent cycle processed in simulated-time order, as fast
            as possible; fully deterministic.
  paced   — one thread per agent, simulated time mapped onto the wall
            clock at a configurable ratio, reports submitted through a
            real transport; used for detection-latency measurement.

Optionally each agent also performs one "sweep" capture over the whole
run, the promiscuous analyze-everything behavior of a packet-level
testbed, so every node files a report even without a local trigger.
"""

from __future__ import annotations

import bisect
import threading
import time
from dataclasses import dataclass, field

from ..agent import Agent, AgentConfig, ReportTransport
from ..controller import Controller
from ..llm import LlmConfig
from ..model import (
    Analyzer,
    CaptureParams,
    NodeId,
    TelemetrySample,
    ThreatReport,
    ThresholdPolicy,
    TimeWindow,
    TriggerDecision,
)
from ..schema import (
    heartbeat_to_dict,
    parse_heartbeat,
    report_to_dict,
    validate_report,
)
from .scenario import ScenarioSpec
from .trace import EventTrace


class TraceWindowSource:
    """Packet source backed by one node's observations in a finished trace."""

    def __init__(self, trace: EventTrace, address: str):
        events = [e for e in trace.events if e.node == address and e.direction != "drop"]
        events.sort(key=lambda e: (e.time_us, e.seq))
        self._times = [e.time_us for e in events]
        self._records = [e.record for e in events]

    def capture(self, window: TimeWindow, max_packets: int):
        lo = bisect.bisect_left(self._times, window.start_us)
        hi = bisect.bisect_right(self._times, window.end_us)
        return self._records[lo:hi][:max_packets]


class SimMetricSource:
    """Metric source reading the engine's per-node telemetry series."""

    def __init__(self, series: list[TelemetrySample]):
        self._times = [s.at_us for s in series]
        self._series = series

    def sample(self, node: NodeId, now_us: int) -> TelemetrySample:
        if not self._series:
            return TelemetrySample(node=node, at_us=now_us, latency_ms=0.0,
                                   jitter_ms=0.0, packet_loss_pct=0.0,
                                   throughput_kbps=0.0)
        i = bisect.bisect_right(self._times, now_us) - 1
        base = self._series[max(i, 0)]
        return TelemetrySample(node=node, at_us=now_us,
                               latency_ms=base.latency_ms, jitter_ms=base.jitter_ms,
                               packet_loss_pct=base.packet_loss_pct,
                               throughput_kbps=base.throughput_kbps)


class LocalTransport:
    """In-process transport that still exercises the wire schema: every
    report is serialized, re-validated, then ingested."""

    def __init__(self, controller: Controller):
        self.controller = controller

    def submit_report(self, report: ThreatReport) -> None:
        ack = self.controller.ingest(validate_report(report_to_dict(report)))
        if not ack.accepted:
            raise ConnectionError(f"report rejected: {ack.reason}")

    def submit_heartbeat(self, heartbeat) -> None:
        self.controller.ingest_heartbeat(parse_heartbeat(heartbeat_to_dict(heartbeat)))


@dataclass
class HarnessOptions:
    sweep: bool = False
    time_ratio: float = 0.0  # 0 = offline; else simulated seconds per wall second
    silence_heartbeats_after_s: dict[str, float] = field(default_factory=dict)
    analyzer_mode: Analyzer = Analyzer.RULE
    llm: LlmConfig | None = None


@dataclass
class TriggerLogEntry:
    address: str
    at_us: int
    decision: TriggerDecision


@dataclass
class DetectionMeasurement:
    address: str
    trigger_at_us: int
    wall_elapsed_s: float
    capture_wall_s: float

    @property
    def detection_s(self) -> float:
        """Trigger-to-report-available wall time, capture window excluded."""
        return self.wall_elapsed_s - self.capture_wall_s


@dataclass
class SimRunResult:
    trace: EventTrace
    controller: Controller
    agents: dict[str, Agent]
    trigger_log: list[TriggerLogEntry]
    detections: list[DetectionMeasurement] = field(default_factory=list)

    def fired_triggers(self) -> list[TriggerLogEntry]:
        return [t for t in self.trigger_log if t.decision.fired]


def default_agent_configs(
    spec: ScenarioSpec,
    analyzer_mode: Analyzer = Analyzer.RULE,
    llm: LlmConfig | None = None,
) -> dict[str, AgentConfig]:
    """Scenario-appropriate agent configs: short runs sample and beat faster."""
    short = spec.duration_s <= 30.0
    configs = {}
    for placement in spec.nodes:
        configs[placement.node.address] = AgentConfig(
            node=placement.node,
            policy=ThresholdPolicy(sample_interval_s=1.0 if short else 2.0,
                                   cooldown_s=30.0),
            capture=CaptureParams(duration_s=5.0),
            analyzer_mode=analyzer_mode,
            llm=llm,
            heartbeat_interval_s=1.0 if short else 5.0,
        )
    return configs


def _sweep_trigger() -> TriggerDecision:
    return TriggerDecision(fired=False, breached_metric=None, observed=0.0, threshold=0.0)


def attach_agents(
    spec: ScenarioSpec,
    trace: EventTrace,
    controller: Controller | None = None,
    configs: dict[str, AgentConfig] | None = None,
    options: HarnessOptions | None = None,
    transport: ReportTransport | None = None,
) -> SimRunResult:
    """Run one embedded agent per node against a finished trace.

    With options.time_ratio == 0 the run is offline and deterministic;
    otherwise each agent runs on its own thread, paced so that
    `time_ratio` simulated seconds elapse per wall second.
    """
    options = options or HarnessOptions()
    controller = controller or Controller()
    configs = configs or default_agent_configs(spec, options.analyzer_mode, options.llm)
    transport = transport or LocalTransport(controller)
    duration_us = round(spec.duration_s * 1e6)

    agents: dict[str, Agent] = {}
    for address, config in configs.items():
        agents[address] = Agent(
            config,
            metric_source=SimMetricSource(trace.telemetry.get(address, [])),
            packet_source=TraceWindowSource(trace, address),
            transport=transport,
            horizon_us=duration_us,
        )

    result = SimRunResult(trace=trace, controller=controller, agents=agents,
                          trigger_log=[])
    if options.time_ratio > 0:
        _run_paced(spec, agents, options, result, duration_us)
    else:
        _run_offline(spec, agents, options, result, duration_us)
    controller.maintain_memory(duration_us)
    return result


def _schedule(config: AgentConfig, duration_us: int) -> list[tuple[int, str]]:
    """(time, kind) entries for one agent, kind in {cycle, heartbeat}."""
    entries = []
    step = int(config.policy.sample_interval_s * 1e6)
    t = 0
    while t <= duration_us:
        entries.append((t, "cycle"))
        t += step
    beat = int(config.heartbeat_interval_s * 1e6)
    t = 0
    while t <= duration_us:
        entries.append((t, "heartbeat"))
        t += beat
    entries.sort(key=lambda e: (e[0], e[1]))  # cycle before heartbeat at equal t
    return entries


def _run_offline(spec, agents, options, result, duration_us) -> None:
    merged: list[tuple[int, str, str]] = []
    for address in sorted(agents):
        for t, kind in _schedule(agents[address].config, duration_us):
            merged.append((t, address, kind))
    merged.sort(key=lambda e: (e[0], e[1], e[2]))

    for t_us, address, kind in merged:
        agent = agents[address]
        if kind == "cycle":
            agent.run_cycle(t_us)
            result.trigger_log.append(TriggerLogEntry(
                address=address, at_us=t_us, decision=agent.trigger_history[-1],
            ))
        else:
            silence_after = options.silence_heartbeats_after_s.get(address)
            if silence_after is None or t_us <= int(silence_after * 1e6):
                agent.heartbeat(t_us)
    if options.sweep:
        for address in sorted(agents):
            agents[address].run_capture(TimeWindow(0, duration_us), _sweep_trigger())


def _run_paced(spec, agents, options, result, duration_us) -> None:
    ratio = options.time_ratio
    lock = threading.Lock()
    wall_start = time.monotonic()

    def to_wall(sim_us: int) -> float:
        return wall_start + sim_us / 1e6 / ratio

    def agent_main(address: str) -> None:
        agent = agents[address]
        agent.capture_gate = lambda window: _sleep_until(to_wall(window.end_us))
        for t_us, kind in _schedule(agent.config, duration_us):
            _sleep_until(to_wall(t_us))
            if kind == "heartbeat":
                silence_after = options.silence_heartbeats_after_s.get(address)
                if silence_after is None or t_us <= int(silence_after * 1e6):
                    agent.heartbeat(t_us)
                continue
            sent_before = agent.reports_sent
            cycle_start = time.monotonic()
            report = agent.run_cycle(t_us)
            cycle_end = time.monotonic()
            decision = agent.trigger_history[-1]
            with lock:
                result.trigger_log.append(TriggerLogEntry(
                    address=address, at_us=t_us, decision=decision,
                ))
            if report is not None and decision.fired and agent.reports_sent > sent_before:
                capture_wall = report.window.length_s() / ratio
                with lock:
                    result.detections.append(DetectionMeasurement(
                        address=address, trigger_at_us=t_us,
                        wall_elapsed_s=cycle_end - cycle_start,
                        capture_wall_s=capture_wall,
                    ))
        if options.sweep:
            agent.run_capture(TimeWindow(0, duration_us), _sweep_trigger())

    threads = [threading.Thread(target=agent_main, args=(address,), daemon=True)
               for address in sorted(agents)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()


def _sleep_until(wall_deadline: float) -> None:
    while True:
        remaining = wall_deadline - time.monotonic()
        if remaining <= 0:
            return
        time.sleep(min(remaining, 0.05))


def run_scenario(
    spec: ScenarioSpec,
    controller: Controller | None = None,
    configs: dict[str, AgentConfig] | None = None,
    options: HarnessOptions | None = None,
    transport: ReportTransport | None = None,
) -> SimRunResult:
    """Simulate the data plane, then run the embedded agents over it."""
    from .engine import run

    return attach_agents(spec, run(spec), controller=controller, configs=configs,
                         options=options, transport=transport)
