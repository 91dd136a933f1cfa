#!/usr/bin/env python3
"""Regenerate the dashboard test fixtures from live simulated runs.

Starts a real controller API, replays the built-in scenarios against it at
wall speed-up, captures the SSE envelope stream, and records one chat
exchange. Run from the repository root:

    python3 frontend/tools/record_fixtures.py
"""

from __future__ import annotations

import json
import threading
import time
import urllib.request
from pathlib import Path

from netsentry.controller import Controller
from netsentry.httpclient import HttpTransport, chat
from netsentry.server import ControllerServer
from netsentry.simnet import (
    HarnessOptions,
    attach_agents,
    builtin_scenario,
    default_agent_configs,
    run,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def record(scenario: str, seed: int, ratio: float, sweep: bool,
           question: str | None = None):
    spec = builtin_scenario(scenario, seed=seed)
    duration_us = round(spec.duration_s * 1e6)
    trace = run(spec)
    controller = Controller()
    wall_start = time.monotonic()
    # The clock stops at scenario end so the post-run drain does not age
    # heartbeats into delayed/missing.
    clock = lambda: min(int((time.monotonic() - wall_start) * ratio * 1e6), duration_us)
    envelopes: list[dict] = []
    done = threading.Event()

    with ControllerServer(controller, clock_us=clock) as server:
        def consume():
            request = urllib.request.Request(f"{server.url}/v1/events")
            try:
                with urllib.request.urlopen(request, timeout=30) as resp:
                    for raw in resp:
                        line = raw.decode().strip()
                        if line.startswith("data: "):
                            envelopes.append(json.loads(line[6:]))
                        if done.is_set():
                            break
            except Exception:
                pass

        threading.Thread(target=consume, daemon=True).start()
        time.sleep(0.2)
        attach_agents(spec, trace, controller=controller,
                      options=HarnessOptions(sweep=sweep, time_ratio=ratio),
                      transport=HttpTransport(server.url),
                      configs=default_agent_configs(spec))
        answer = chat(server.url, question) if question else None
        time.sleep(0.6)
        done.set()
    return envelopes, answer


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    envelopes, answer = record("ddos8", 7, ratio=20.0, sweep=True,
                               question="who is the attacker?")
    (FIXTURES / "ddos8_events.json").write_text(
        json.dumps(envelopes, indent=2, sort_keys=True))
    (FIXTURES / "chat_attacker.json").write_text(
        json.dumps({"question": "who is the attacker?", "answer": answer},
                   indent=2, sort_keys=True))
    print(f"ddos8: {len(envelopes)} envelopes; chat answer: {answer}")

    envelopes, _ = record("degraded", 1, ratio=60.0, sweep=False)
    (FIXTURES / "degraded_events.json").write_text(
        json.dumps(envelopes, indent=2, sort_keys=True))
    print(f"degraded: {len(envelopes)} envelopes")


if __name__ == "__main__":
    main()
