"""Trigger evaluation, cooldown behavior, and capture tuning."""

from __future__ import annotations

import random
import socket
import threading

from conftest import make_trigger
from netsentry.model import (
    CaptureBounds,
    CaptureParams,
    Metric,
    NodeId,
    TelemetrySample,
    ThresholdPolicy,
)
from netsentry.telemetry import LiveMetricSource, evaluate, tune

NODE = NodeId(address="10.0.0.1", agent_id="agent-1")


def sample(at_s=0.0, latency=0.0, jitter=0.0, loss=0.0, throughput=0.0) -> TelemetrySample:
    return TelemetrySample(
        node=NODE, at_us=int(at_s * 1e6), latency_ms=latency, jitter_ms=jitter,
        packet_loss_pct=loss, throughput_kbps=throughput,
    )


class TestEvaluate:
    def test_latency_breach_fires(self):
        d = evaluate(sample(latency=600.0), ThresholdPolicy())
        assert d.fired and d.breached_metric is Metric.LATENCY
        assert d.observed == 600.0 and d.threshold == 200.0

    def test_all_zero_does_not_fire(self):
        d = evaluate(sample(), ThresholdPolicy())
        assert not d.fired and d.breached_metric is None

    def test_exactly_at_threshold_does_not_fire(self):
        assert not evaluate(sample(latency=200.0), ThresholdPolicy()).fired

    def test_highest_ratio_wins(self):
        # loss 60/5 = 12x beats latency 410/200 = 2.05x
        d = evaluate(sample(latency=410.0, loss=60.0), ThresholdPolicy())
        assert d.breached_metric is Metric.LOSS

    def test_tie_breaks_latency_first(self):
        policy = ThresholdPolicy(latency_ms_max=100.0, jitter_ms_max=10.0)
        d = evaluate(sample(latency=200.0, jitter=20.0), policy)  # both exactly 2x
        assert d.breached_metric is Metric.LATENCY

    def test_cooldown_suppresses(self):
        # Last trigger at t=0, cooldown 30 s: breach at t=10 stays quiet.
        d = evaluate(sample(at_s=10.0, latency=600.0), ThresholdPolicy(),
                     last_trigger_at_us=0)
        assert not d.fired

    def test_cooldown_expiry_scripted(self):
        # Enumerate a scripted sequence: breaches at 2 s intervals, cooldown 30 s.
        policy = ThresholdPolicy()
        last = None
        fired_at = []
        for step in range(0, 40):
            t_s = step * 2.0
            d = evaluate(sample(at_s=t_s, latency=600.0), policy, last)
            if d.fired:
                fired_at.append(t_s)
                last = int(t_s * 1e6)
        assert fired_at == [0.0, 30.0, 60.0]
        assert all(b - a >= policy.cooldown_s for a, b in zip(fired_at, fired_at[1:]))

    def test_monotonicity_property(self):
        rng = random.Random(20260)
        policy = ThresholdPolicy()
        for _ in range(300):
            lo = sample(latency=rng.uniform(0, 400), jitter=rng.uniform(0, 100),
                        loss=rng.uniform(0, 10))
            hi = sample(latency=lo.latency_ms + rng.uniform(0, 200),
                        jitter=lo.jitter_ms + rng.uniform(0, 50),
                        loss=min(100.0, lo.packet_loss_pct + rng.uniform(0, 5)))
            if evaluate(lo, policy).fired:
                assert evaluate(hi, policy).fired


class TestTune:
    BOUNDS = CaptureBounds(minimum=CaptureParams(duration_s=5.0),
                           maximum=CaptureParams(duration_s=100.0))

    def test_two_of_three_fired_doubles(self):
        history = [make_trigger(True), make_trigger(True), make_trigger(False)]
        out = tune(history, CaptureParams(duration_s=25.0), self.BOUNDS)
        assert out.duration_s == 50.0

    def test_five_quiet_halves(self):
        history = [make_trigger(False)] * 5
        out = tune(history, CaptureParams(duration_s=25.0), self.BOUNDS)
        assert out.duration_s == 12.5

    def test_empty_history_unchanged(self):
        out = tune([], CaptureParams(duration_s=25.0), self.BOUNDS)
        assert out.duration_s == 25.0

    def test_clamped_to_max(self):
        history = [make_trigger(True)] * 3
        out = tune(history, CaptureParams(duration_s=80.0), self.BOUNDS)
        assert out.duration_s == 100.0

    def test_clamped_to_min(self):
        history = [make_trigger(False)] * 5
        out = tune(history, CaptureParams(duration_s=8.0), self.BOUNDS)
        assert out.duration_s == 5.0

    def test_four_quiet_not_enough_to_halve(self):
        history = [make_trigger(False)] * 4
        out = tune(history, CaptureParams(duration_s=25.0), self.BOUNDS)
        assert out.duration_s == 25.0

    def test_pure_function(self):
        history = [make_trigger(True), make_trigger(True)]
        current = CaptureParams(duration_s=25.0)
        assert tune(history, current, self.BOUNDS) == tune(history, current, self.BOUNDS)
        assert current.duration_s == 25.0

    def test_always_within_bounds_property(self):
        rng = random.Random(7)
        for _ in range(200):
            history = [make_trigger(rng.random() < 0.5) for _ in range(rng.randint(0, 10))]
            current = CaptureParams(duration_s=rng.uniform(5.0, 100.0))
            out = tune(history, current, self.BOUNDS)
            assert 5.0 <= out.duration_s <= 100.0


class TestLiveSource:
    def test_reachable_target_measures_latency(self):
        server = socket.socket()
        server.bind(("127.0.0.1", 0))
        server.listen(8)
        port = server.getsockname()[1]
        accepted = []

        def accept_loop():
            try:
                while True:
                    conn, _ = server.accept()
                    accepted.append(1)
                    conn.close()
            except OSError:
                pass

        thread = threading.Thread(target=accept_loop, daemon=True)
        thread.start()
        try:
            source = LiveMetricSource("127.0.0.1", port, probes_per_sample=2)
            s = source.sample(NODE, now_us=0)
            assert s.packet_loss_pct == 0.0
            assert 0.0 <= s.latency_ms < 1000.0
        finally:
            server.close()

    def test_unreachable_target_records_sentinel(self):
        # Grab a port, close it, probe it: connection refused, never raised.
        placeholder = socket.socket()
        placeholder.bind(("127.0.0.1", 0))
        port = placeholder.getsockname()[1]
        placeholder.close()
        source = LiveMetricSource("127.0.0.1", port, probes_per_sample=1, timeout_s=0.2)
        s = source.sample(NODE, now_us=0)
        assert s.packet_loss_pct == 100.0
        assert s.latency_ms == 10_000.0
