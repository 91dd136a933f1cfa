"""
Controller HTTP API (schema_version 1).

  POST /v1/reports            submit a ThreatReport        -> 202 / 400
  POST /v1/heartbeats         submit a Heartbeat           -> 202 / 400
  GET  /v1/nodes              health + latest report digest per node
  GET  /v1/incidents          open incidents
  GET  /v1/incidents/{id}     one incident
  POST /v1/chat               {"question"} -> {"answer"}
  GET  /v1/events             server-push stream of WireEnvelope frames (SSE)
  GET  /v1/metrics/{address}  recent telemetry series

The event stream is Server-Sent Events: one `data: <envelope JSON>` frame
per message, ordered exactly as the controller ingested them. No auth or
TLS here; front with a reverse proxy in real deployments.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from .controller import Controller
from .model import HealthStatus
from .schema import (
    ReportValidationError,
    health_to_dict,
    incident_to_dict,
    parse_heartbeat,
    sample_to_dict,
    validate_report,
)
from .wire import envelope_to_json, make_envelope

log = logging.getLogger("netsentry.server")


def _wall_clock_us() -> int:
    return time.time_ns() // 1000


class ControllerServer:
    """Serves a Controller over HTTP with an SSE push channel.

    clock_us supplies "now" for health checks and envelope stamps; simulated
    runs pass their own clock so timestamps stay on the simulation timeline.
    """

    def __init__(self, controller: Controller, host: str = "127.0.0.1",
                 port: int = 0, clock_us: Callable[[], int] | None = None):
        self.controller = controller
        self.clock_us = clock_us or _wall_clock_us
        self._subscribers: list[queue.Queue] = []
        self._subscriber_lock = threading.Lock()
        self._closing = threading.Event()
        self._health_seen: dict[str, HealthStatus] = {}

        controller.add_listener(self._on_controller_event)
        self._server = ThreadingHTTPServer((host, port), self._make_handler())
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._health_thread = threading.Thread(target=self._health_watch, daemon=True)

    # -- lifecycle ----------------------------------------------------------

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "ControllerServer":
        self._thread.start()
        self._health_thread.start()
        return self

    def stop(self) -> None:
        self._closing.set()
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "ControllerServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- events ---------------------------------------------------------------

    def _publish(self, kind: str, payload: dict) -> None:
        envelope = make_envelope(kind, payload, self.clock_us())
        with self._subscriber_lock:
            targets = list(self._subscribers)
        for q in targets:
            q.put(envelope)

    def _on_controller_event(self, kind: str, payload: dict) -> None:
        self._publish(kind, payload)

    def _health_watch(self) -> None:
        while not self._closing.wait(0.5):
            try:
                for health in self.controller.monitor_agents(self.clock_us()):
                    previous = self._health_seen.get(health.agent_id)
                    if previous != health.status:
                        self._health_seen[health.agent_id] = health.status
                        self._publish("health", health_to_dict(health))
            except Exception:
                log.exception("health watch failed")

    def publish_chat(self, question: str, answer: str) -> None:
        self._publish("chat_request", {"question": question})
        self._publish("chat_response", {"answer": answer})

    # -- request handling -------------------------------------------------------

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                log.debug("http: %s", args)

            def _json(self, status: int, payload) -> None:
                body = json.dumps(payload, sort_keys=True).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)

            def _read_body(self) -> bytes:
                length = int(self.headers.get("Content-Length", 0))
                return self.rfile.read(length)

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_POST(self):
                try:
                    if self.path == "/v1/reports":
                        return self._post_report()
                    if self.path == "/v1/heartbeats":
                        return self._post_heartbeat()
                    if self.path == "/v1/chat":
                        return self._post_chat()
                    self._json(404, {"error": "unknown endpoint"})
                except ReportValidationError as e:
                    self._json(400, {"error": str(e), "field": getattr(e, "field", "$")})
                except json.JSONDecodeError as e:
                    self._json(400, {"error": f"invalid JSON: {e}", "field": "$"})
                except Exception:
                    log.exception("request failed: %s", self.path)
                    self._json(500, {"error": "internal error"})

            def _post_report(self):
                report = validate_report(self._read_body())
                ack = server.controller.ingest(report)
                self._json(202, {"status": "accepted", "duplicate": ack.duplicate,
                                 "report_id": report.report_id})

            def _post_heartbeat(self):
                heartbeat = parse_heartbeat(json.loads(self._read_body()))
                server.controller.ingest_heartbeat(heartbeat)
                self._json(202, {"status": "accepted"})

            def _post_chat(self):
                body = json.loads(self._read_body())
                question = body.get("question") if isinstance(body, dict) else None
                if not isinstance(question, str) or not question:
                    self._json(400, {"error": "expected {\"question\": string}",
                                     "field": "question"})
                    return
                answer = server.controller.answer_query(question, server.clock_us())
                server.publish_chat(question, answer)
                self._json(200, {"answer": answer})

            def do_GET(self):
                try:
                    if self.path == "/v1/events":
                        return self._get_events()
                    if self.path == "/v1/nodes":
                        return self._get_nodes()
                    if self.path == "/v1/incidents":
                        incidents = [incident_to_dict(i) for i in server.controller.incidents()]
                        return self._json(200, incidents)
                    if self.path.startswith("/v1/incidents/"):
                        incident_id = self.path.rsplit("/", 1)[1]
                        incident = server.controller.incident_by_id(incident_id)
                        if incident is None:
                            return self._json(404, {"error": f"no incident {incident_id}"})
                        return self._json(200, incident_to_dict(incident))
                    if self.path.startswith("/v1/metrics/"):
                        address = self.path.rsplit("/", 1)[1]
                        series = server.controller.samples_for(address)
                        return self._json(200, [sample_to_dict(s) for s in series])
                    self._json(404, {"error": "unknown endpoint"})
                except Exception:
                    log.exception("request failed: %s", self.path)
                    self._json(500, {"error": "internal error"})

            def _get_nodes(self):
                health = {h.agent_id: health_to_dict(h)
                          for h in server.controller.monitor_agents(server.clock_us())}
                nodes = []
                for agent_id, h in sorted(health.items()):
                    heartbeat = server.controller._heartbeats.get(agent_id)
                    address = heartbeat.address if heartbeat else ""
                    latest = server.controller.latest_report_for(address)
                    nodes.append({
                        "agent_id": agent_id,
                        "address": address,
                        "health": h,
                        "latest_report": (server.controller.report_digest(latest)
                                          if latest else None),
                    })
                self._json(200, nodes)

            def _get_events(self):
                q: queue.Queue = queue.Queue()
                with server._subscriber_lock:
                    server._subscribers.append(q)
                try:
                    self.send_response(200)
                    self.send_header("Content-Type", "text/event-stream")
                    self.send_header("Cache-Control", "no-cache")
                    self.send_header("Access-Control-Allow-Origin", "*")
                    self.send_header("Connection", "close")
                    self.end_headers()
                    while not server._closing.is_set():
                        try:
                            envelope = q.get(timeout=0.25)
                        except queue.Empty:
                            self.wfile.write(b": keepalive\n\n")
                            self.wfile.flush()
                            continue
                        frame = f"data: {envelope_to_json(envelope)}\n\n"
                        self.wfile.write(frame.encode())
                        self.wfile.flush()
                except (BrokenPipeError, ConnectionResetError):
                    pass
                finally:
                    with server._subscriber_lock:
                        if q in server._subscribers:
                            server._subscribers.remove(q)

        return Handler
