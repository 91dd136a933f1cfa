#!/usr/bin/env python3
"""The eight-node DDoS experiment, end to end, in process.

Node .1 floods .4 and .6 with ten 512-byte/500 kbps TCP SYN streams during
seconds 1..9 while two echo pairs chat in the background. Every node runs an
embedded agent; their reports land in an embedded controller, which
correlates them into a single incident with attacker and victim roles.
"""

from netsentry.model import TimeWindow
from netsentry.simnet import HarnessOptions, attach_agents, builtin_scenario, run

spec = builtin_scenario("ddos8", seed=7)
print(f"scenario: {spec.name}, {len(spec.nodes)} nodes, {spec.duration_s:.0f} s")

trace = run(spec)
print(f"data plane simulated: {len(trace.events)} packet events")

attacker_tx = sum(1 for e in trace.events
                  if e.node == "192.168.1.1" and e.direction == "tx")
print(f"attacker transmitted {attacker_tx} packets "
      f"(10 streams x 8 s at 122 pps each)\n")

result = attach_agents(spec, trace, options=HarnessOptions(sweep=True))
controller = result.controller

reports = controller.reports_in(TimeWindow(0, 20_000_000))
print(f"{len(reports)} reports reached the controller:")
for r in reports:
    trig = (f"trigger={r.trigger.breached_metric.value}" if r.trigger.fired
            else "sweep")
    print(f"  {r.report_id:<14} {r.node.address:<14} "
          f"{r.verdict.category.value:<14} {r.packet_count:>6} pkts  ({trig})")

print()
for incident in controller.incidents():
    print(f"incident {incident.incident_id}: {incident.category.value} "
          f"(confidence {incident.confidence:.2f})")
    for address, role in sorted(incident.roles.items()):
        print(f"  {address:<14} {role.value}")
    print(f"  narrative: {incident.narrative}")
    print("  advisories:")
    for action in incident.recommendation.advisory_actions:
        print(f"    - {action}")

print()
for question in ("who is the attacker?", "status", "192.168.1.4"):
    print(f"operator> {question}")
    print(f"controller> {controller.answer_query(question, 10_000_000)}\n")
