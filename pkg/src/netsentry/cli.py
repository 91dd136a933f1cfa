"""
Command-line entry points.

  netsentry agent      --config agent.conf
  netsentry controller --config controller.conf --bind 127.0.0.1:8700
  netsentry sim        --scenario ddos8 --seed 7 --out out/ [--live]
  netsentry analyze    --pcap capture.pcap [--csv flows.csv] [--report r.json]
  netsentry chat       --url http://127.0.0.1:8700

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .agent import Agent, AgentConfig, ExternalCaptureSource
from .config import ConfigError, load_agent_config, load_controller_config, load_live_extras
from .controller import Controller
from .flows import export_csv, extract_flows
from .httpclient import ApiError, HttpTransport, chat as chat_request
from .llm import LlmConfig, analyze as analyze_flows
from .model import Analyzer, NodeId, TimeWindow, TriggerDecision
from .schema import incident_to_dict, report_to_dict, sample_to_dict
from .server import ControllerServer
from .simnet import (
    HarnessOptions,
    SpecError,
    UnknownScenario,
    attach_agents,
    builtin_scenario,
    default_agent_configs,
    export_pcap,
    load_scenario,
    run as run_engine,
    scenario_to_dict,
    write_trace,
)
from .simnet.trace import read_trace
from .telemetry import LiveMetricSource

log = logging.getLogger("netsentry.cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> _Parser:
    parser = _Parser(prog="netsentry", description="two-tier network security monitor")
    parser.add_argument("--version", action="version", version=f"netsentry {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_agent = sub.add_parser("agent", help="run a node agent")
    p_agent.add_argument("--config", required=True)

    p_ctrl = sub.add_parser("controller", help="run the central controller API")
    p_ctrl.add_argument("--config", default=None)
    p_ctrl.add_argument("--bind", default="127.0.0.1:8700")

    p_sim = sub.add_parser("sim", help="run a simulated scenario with embedded agents")
    p_sim.add_argument("--scenario", required=True,
                       help="ddos8 | degraded | path to a scenario JSON file")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--live", action="store_true",
                       help="pace the run on the wall clock and serve the API")
    p_sim.add_argument("--bind", default="127.0.0.1:8700")
    p_sim.add_argument("--time-ratio", type=float, default=5.0,
                       help="simulated seconds per wall second in --live mode")
    p_sim.add_argument("--analyzer", choices=["rule", "llm"], default="rule")
    p_sim.add_argument("--llm-url", default=None)
    p_sim.add_argument("--llm-model", default="stub-model")
    p_sim.add_argument("--sweep", choices=["auto", "on", "off"], default="auto",
                       help="also analyze each node's full-run capture")
    p_sim.add_argument("--hold", action="store_true",
                       help="with --live: keep serving the API after the run ends")

    p_an = sub.add_parser("analyze", help="analyze a capture file offline")
    p_an.add_argument("--pcap", required=True)
    p_an.add_argument("--csv", default=None)
    p_an.add_argument("--analyzer", choices=["rule", "llm"], default="rule")
    p_an.add_argument("--llm-url", default=None)
    p_an.add_argument("--llm-model", default="stub-model")
    p_an.add_argument("--report", default=None)

    p_chat = sub.add_parser("chat", help="interactive operator chat")
    p_chat.add_argument("--url", required=True)
    return parser


def cli(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    try:
        if args.command == "agent":
            return _cmd_agent(args)
        if args.command == "controller":
            return _cmd_controller(args)
        if args.command == "sim":
            return _cmd_sim(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "chat":
            return _cmd_chat(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (ConfigError, SpecError, UnknownScenario) as e:
        print(f"netsentry: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 0
    except Exception as e:
        log.debug("runtime failure", exc_info=True)
        print(f"netsentry: error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    raise SystemExit(cli())


# ---------------------------------------------------------------------------
# agent / controller
# ---------------------------------------------------------------------------

def _cmd_agent(args) -> int:
    config = load_agent_config(args.config)
    extras = load_live_extras(args.config)
    if not config.controller_url:
        raise ConfigError("controller.url is required to run a live agent")

    metric_source = LiveMetricSource(
        extras["telemetry.probe_host"], int(extras["telemetry.probe_port"])
    )
    command = extras["capture.command"]
    if command:
        packet_source = ExternalCaptureSource(command)
    else:
        class _NullCapture:
            def capture(self, window, max_packets):
                return []
        packet_source = _NullCapture()

    agent = Agent(config, metric_source, packet_source,
                  transport=HttpTransport(config.controller_url))
    print(f"agent {config.node.agent_id} on {config.node.address} -> "
          f"{config.controller_url}", flush=True)
    interval = config.policy.sample_interval_s
    next_beat = 0.0
    while True:
        now_us = time.time_ns() // 1000
        agent.run_cycle(now_us)
        if time.monotonic() >= next_beat:
            agent.heartbeat(now_us)
            next_beat = time.monotonic() + config.heartbeat_interval_s
        time.sleep(interval)


def _cmd_controller(args) -> int:
    controller = load_controller_config(args.config) if args.config else Controller()
    host, port = _parse_bind(args.bind)
    with ControllerServer(controller, host=host, port=port) as server:
        print(f"controller API at {server.url}", flush=True)
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass
    return 0


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"--bind expects HOST:PORT, got {bind!r}")
    return host, int(port)


# ---------------------------------------------------------------------------
# sim
# ---------------------------------------------------------------------------

def _resolve_scenario(name: str, seed: int):
    if name in ("ddos8", "degraded"):
        return builtin_scenario(name, seed)
    path = Path(name)
    if not path.exists():
        raise UsageError(f"scenario {name!r} is not a builtin or a file")
    spec = load_scenario(path)
    spec.seed = seed
    return spec


def _cmd_sim(args) -> int:
    spec = _resolve_scenario(args.scenario, args.seed)
    sweep = {"auto": spec.name == "ddos8", "on": True, "off": False}[args.sweep]
    llm = None
    if args.analyzer == "llm":
        if not args.llm_url:
            raise UsageError("--analyzer llm requires --llm-url")
        llm = LlmConfig(endpoint_url=args.llm_url, model_id=args.llm_model)
    options = HarnessOptions(
        sweep=sweep,
        analyzer_mode=Analyzer(args.analyzer),
        llm=llm,
        time_ratio=args.time_ratio if args.live else 0.0,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = run_engine(spec)
    controller = Controller()
    events: list[dict] = []
    controller.add_listener(_event_recorder(events))

    if args.live:
        host, port = _parse_bind(args.bind)
        wall_start = time.monotonic()
        clock = lambda: int((time.monotonic() - wall_start) * options.time_ratio * 1e6)
        with ControllerServer(controller, host=host, port=port, clock_us=clock) as server:
            print(f"live run: API at {server.url}, "
                  f"{options.time_ratio}x wall speed", flush=True)
            result = attach_agents(
                spec, trace, controller=controller, options=options,
                transport=HttpTransport(server.url),
                configs=default_agent_configs(spec, options.analyzer_mode, llm),
            )
            if args.hold:
                print("run finished; serving until interrupted", flush=True)
                try:
                    while True:
                        time.sleep(3600)
                except KeyboardInterrupt:
                    pass
    else:
        result = attach_agents(spec, trace, controller=controller, options=options)

    _write_sim_outputs(out, spec, result, events)
    incidents = result.controller.incidents()
    print(f"scenario {spec.name} seed {spec.seed}: "
          f"{len(result.controller.reports_in(TimeWindow(0, round(spec.duration_s * 1e6) + 1)))} reports, "
          f"{len(incidents)} incidents -> {out}", flush=True)
    for incident in incidents:
        roles = ", ".join(f"{a}={r.value}" for a, r in sorted(incident.roles.items()))
        print(f"  {incident.incident_id}: {incident.category.value} [{roles}]", flush=True)
    return 0


def _event_recorder(events: list[dict]):
    """Capture controller events as WireEnvelopes with payload-derived
    timestamps, so offline runs stay byte-stable."""
    from .wire import make_envelope

    def on_event(kind: str, payload: dict) -> None:
        sent = (payload.get("at_us")
                or payload.get("window", {}).get("end_us")
                or payload.get("last_heartbeat_at_us")
                or 0)
        events.append(make_envelope(kind, payload, int(sent)))

    return on_event


def _write_sim_outputs(out: Path, spec, result, events: list[dict]) -> None:
    write_trace(result.trace, out / "trace.bin")
    export_pcap(result.trace, out / "trace.pcap")
    (out / "scenario.json").write_text(
        json.dumps(scenario_to_dict(spec), indent=2, sort_keys=True) + "\n")
    telemetry = {
        address: [sample_to_dict(s) for s in series]
        for address, series in sorted(result.trace.telemetry.items())
    }
    (out / "telemetry.json").write_text(json.dumps(telemetry, indent=2, sort_keys=True) + "\n")

    reports_dir = out / "reports"
    reports_dir.mkdir(exist_ok=True)
    window = TimeWindow(0, round(spec.duration_s * 1e6) + 1)
    reports = result.controller.reports_in(window)
    for report in reports:
        (reports_dir / f"{report.report_id}.json").write_text(
            json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")

    incidents = [incident_to_dict(i) for i in result.controller.incidents()]
    (out / "incidents.json").write_text(json.dumps(incidents, indent=2, sort_keys=True) + "\n")
    (out / "events.json").write_text(json.dumps(events, indent=2, sort_keys=True) + "\n")

    manifest = {
        "tool": f"netsentry {__version__}",
        "scenario": spec.name,
        "seed": spec.seed,
        "schema_version": "1",
        "nodes": [p.node.address for p in spec.nodes],
        "events": len(result.trace.events),
        "reports": len(reports),
        "incidents": len(incidents),
        "files": ["trace.bin", "trace.bin.idx", "trace.pcap", "scenario.json",
                  "telemetry.json", "reports/", "incidents.json", "events.json"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# analyze / chat
# ---------------------------------------------------------------------------

def _cmd_analyze(args) -> int:
    path = Path(args.pcap)
    if not path.exists():
        raise UsageError(f"no such capture file: {path}")
    data = read_trace(path)
    records = data.records
    window = (TimeWindow(records[0].at_us, records[-1].at_us)
              if records else TimeWindow(0, 0))
    flows = extract_flows(records, window)

    llm = None
    mode = Analyzer(args.analyzer)
    if mode is Analyzer.LLM:
        if not args.llm_url:
            raise UsageError("--analyzer llm requires --llm-url")
        llm = LlmConfig(endpoint_url=args.llm_url, model_id=args.llm_model)
    trigger = TriggerDecision(fired=False, breached_metric=None, observed=0.0, threshold=0.0)
    verdict, summary = analyze_flows(flows, trigger, "", mode=mode, llm=llm)

    from .model import ThreatReport
    report = ThreatReport(
        report_id=f"analyze-{path.stem}",
        node=NodeId(address="0.0.0.0", agent_id="analyze-cli"),
        window=window,
        trigger=trigger,
        packet_count=len(records),
        byte_count=sum(r.length_bytes for r in records),
        top_flows=flows[:20],
        verdict=verdict,
        summary_text=summary,
        created_at_us=window.end_us,
    )
    if args.csv:
        with open(args.csv, "w") as sink:
            export_csv(flows, sink)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
    print(f"packets: {len(records)} (skipped {data.skipped} non-IP frames)")
    print(f"flows: {len(flows)}")
    print(f"verdict: {verdict.category.value} (confidence {verdict.confidence:.2f}, "
          f"analyzer {verdict.analyzer.value})")
    print(summary)
    return 0


def _cmd_chat(args) -> int:
    print("netsentry chat (blank line or Ctrl-D to exit)")
    while True:
        try:
            question = input("> ").strip()
        except EOFError:
            print()
            return 0
        if not question:
            return 0
        try:
            print(chat_request(args.url, question))
        except ApiError as e:
            print(f"error: {e}", file=sys.stderr)


if __name__ == "__main__":
    main()
