"""
Performance monitoring: metric sampling, threshold triggers, capture tuning.

evaluate() and tune() are pure functions; the sampling side is a small
MetricSource protocol with a live TCP-probe implementation here and a
simulated implementation in simnet.
"""

from __future__ import annotations

import socket
import statistics
import time
from collections import deque
from typing import Protocol as TypingProtocol

from .model import (
    SENTINEL_LATENCY_MS,
    CaptureBounds,
    CaptureParams,
    Metric,
    NodeId,
    TelemetrySample,
    ThresholdPolicy,
    TriggerDecision,
)


class MetricSource(TypingProtocol):
    def sample(self, node: NodeId, now_us: int) -> TelemetrySample: ...


def evaluate(
    sample: TelemetrySample,
    policy: ThresholdPolicy,
    last_trigger_at_us: int | None = None,
) -> TriggerDecision:
    """Decide whether a sample breaches the policy, honoring the cooldown.

    When several metrics breach, the one with the greatest observed/threshold
    ratio wins; exact ties fall back to the fixed order latency > jitter > loss.
    """
    candidates = [
        (Metric.LATENCY, sample.latency_ms, policy.latency_ms_max),
        (Metric.JITTER, sample.jitter_ms, policy.jitter_ms_max),
        (Metric.LOSS, sample.packet_loss_pct, policy.packet_loss_pct_max),
    ]
    breached = [(m, obs, thr) for m, obs, thr in candidates if obs > thr]
    if not breached:
        return TriggerDecision(fired=False, breached_metric=None, observed=0.0, threshold=0.0)

    metric, observed, threshold = max(breached, key=lambda c: c[1] / c[2])

    in_cooldown = (
        last_trigger_at_us is not None
        and sample.at_us - last_trigger_at_us < int(policy.cooldown_s * 1e6)
    )
    if in_cooldown:
        return TriggerDecision(fired=False, breached_metric=None, observed=0.0, threshold=0.0)
    return TriggerDecision(fired=True, breached_metric=metric, observed=observed, threshold=threshold)


def tune(
    history: list[TriggerDecision],
    current: CaptureParams,
    bounds: CaptureBounds,
) -> CaptureParams:
    """Adapt capture duration from recent trigger activity.

    Doubles the duration when >= 2 of the last 3 decisions fired; halves it
    after 5 consecutive quiet decisions; otherwise leaves it unchanged.
    The result is always clamped to bounds.
    """
    duration = current.duration_s
    recent_fired = sum(1 for d in history[-3:] if d.fired)
    if recent_fired >= 2:
        duration = duration * 2
    elif len(history) >= 5 and not any(d.fired for d in history[-5:]):
        duration = duration / 2
    duration = min(max(duration, bounds.minimum.duration_s), bounds.maximum.duration_s)
    max_packets = min(
        max(current.max_packets, bounds.minimum.max_packets), bounds.maximum.max_packets
    )
    return CaptureParams(duration_s=duration, max_packets=max_packets)


class ProbeUnavailable(Exception):
    """Raised internally when the live probe target cannot be reached."""


class LiveMetricSource:
    """Timed TCP echo probes against a reference target.

    Latency is the connect round-trip; jitter is the stddev of the most
    recent latencies; loss is the failed-probe fraction of the last window.
    An unreachable target records 100% loss at the sentinel latency rather
    than raising.
    """

    def __init__(self, target_host: str, target_port: int = 7,
                 probes_per_sample: int = 3, timeout_s: float = 1.0,
                 history: int = 5):
        self.target_host = target_host
        self.target_port = target_port
        self.probes_per_sample = probes_per_sample
        self.timeout_s = timeout_s
        self._latencies: deque[float] = deque(maxlen=history)

    def _probe_once(self) -> float:
        start = time.monotonic()
        try:
            with socket.create_connection(
                (self.target_host, self.target_port), timeout=self.timeout_s
            ):
                pass
        except OSError as e:
            raise ProbeUnavailable(str(e)) from e
        return (time.monotonic() - start) * 1000.0

    def sample(self, node: NodeId, now_us: int) -> TelemetrySample:
        ok: list[float] = []
        failed = 0
        for _ in range(self.probes_per_sample):
            try:
                ok.append(self._probe_once())
            except ProbeUnavailable:
                failed += 1
        if not ok:
            return TelemetrySample(
                node=node, at_us=now_us,
                latency_ms=SENTINEL_LATENCY_MS, jitter_ms=0.0,
                packet_loss_pct=100.0, throughput_kbps=0.0,
            )
        latency = statistics.median(ok)
        jitter = statistics.pstdev(self._latencies) if len(self._latencies) >= 2 else 0.0
        self._latencies.append(latency)
        return TelemetrySample(
            node=node, at_us=now_us,
            latency_ms=latency, jitter_ms=jitter,
            packet_loss_pct=100.0 * failed / self.probes_per_sample,
            throughput_kbps=0.0,
        )
