"""Deterministic network simulator: scenarios, engine, traces, harness."""

from .engine import Engine, run
from .harness import (
    HarnessOptions,
    SimRunResult,
    attach_agents,
    default_agent_configs,
    run_scenario,
)
from .scenario import (
    HUB_ADDRESS,
    LinkSpec,
    NodePlacement,
    PhaseSpec,
    ScenarioSpec,
    SpecError,
    TrafficFlowSpec,
    UnknownScenario,
    builtin_scenario,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .trace import (
    EventTrace,
    LinkCounters,
    TraceEvent,
    export_pcap,
    read_native_trace,
    read_trace,
    trace_to_bytes,
    write_trace,
)

__all__ = [
    "Engine", "run", "HarnessOptions", "SimRunResult", "attach_agents",
    "default_agent_configs", "run_scenario", "HUB_ADDRESS", "LinkSpec",
    "NodePlacement", "PhaseSpec", "ScenarioSpec", "SpecError",
    "TrafficFlowSpec", "UnknownScenario", "builtin_scenario", "load_scenario",
    "scenario_from_dict", "scenario_to_dict", "EventTrace", "LinkCounters",
    "TraceEvent", "export_pcap", "read_native_trace", "read_trace",
    "trace_to_bytes", "write_trace",
]
