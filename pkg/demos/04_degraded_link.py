#!/usr/bin/env python3
"""Baseline / Degraded / Recovery on a two-node link.

The Degraded phase (30..90 s) imposes a 600 ms one-way delay and a 1 Mbps
cap. Round-trip telemetry jumps from 40 ms to ~1200 ms, breaching the
200 ms threshold on the first sample of the phase; the cooldown then spaces
the follow-up triggers.
"""

from netsentry.simnet import attach_agents, builtin_scenario, run

spec = builtin_scenario("degraded", seed=1)
trace = run(spec)

print("telemetry at 10.0.0.1 (sampled every 1 s, shown every 10 s):")
print(f"{'t':>5}  {'latency':>9}  {'jitter':>7}  bar")
for sample in trace.telemetry["10.0.0.1"]:
    t_s = sample.at_us // 1_000_000
    if t_s % 10 != 0:
        continue
    bar = "#" * min(int(sample.latency_ms / 25), 60)
    print(f"{t_s:>4}s  {sample.latency_ms:>7.0f}ms  {sample.jitter_ms:>5.0f}ms  {bar}")

result = attach_agents(spec, run(spec))
print("\ntriggers (threshold: latency > 200 ms, cooldown 30 s):")
for entry in result.fired_triggers():
    d = entry.decision
    print(f"  t={entry.at_us / 1e6:>5.0f}s  {entry.address}  "
          f"{d.breached_metric.value} {d.observed:.0f} vs {d.threshold:.0f}")

first = min(result.fired_triggers(), key=lambda e: e.at_us)
print(f"\nfirst detection {first.at_us / 1e6 - 30:.0f} s into the Degraded phase")
