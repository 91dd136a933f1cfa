"""
Bundled stub LLM endpoint speaking the minimal {"model","prompt"} -> {"text"}
protocol, with scriptable fault injection for resilience testing.

Behaviors, chosen per request from a repeating script:
  ok        — well-formed verdict JSON (the configured canned verdict)
  prose     — verdict JSON wrapped in prose and a code fence
  garbage   — non-JSON text
  malformed — JSON missing required fields
  http500   — internal server error status
  hang      — sleep past any reasonable client timeout, then answer
  empty     — empty body

A fixed artificial delay (seconds) can be applied to every response.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

_CANNED = {
    "category": "benign",
    "confidence": 1.0,
    "evidence": [],
    "summary": "Traffic appears normal.",
}


class StubLlmServer:
    def __init__(self, behaviors: list[str] | None = None, delay_s: float = 0.0,
                 verdict: dict | None = None, hang_s: float = 30.0,
                 host: str = "127.0.0.1", port: int = 0):
        self.behaviors = behaviors or ["ok"]
        self.delay_s = delay_s
        self.verdict = dict(verdict or _CANNED)
        self.hang_s = hang_s
        self.request_count = 0
        self.prompts: list[str] = []
        self.auth_headers: list[str | None] = []
        self._lock = threading.Lock()

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                try:
                    prompt = json.loads(body).get("prompt", "")
                except (json.JSONDecodeError, AttributeError):
                    prompt = ""
                with stub._lock:
                    behavior = stub.behaviors[stub.request_count % len(stub.behaviors)]
                    stub.request_count += 1
                    stub.prompts.append(prompt)
                    stub.auth_headers.append(self.headers.get("Authorization"))
                if stub.delay_s:
                    time.sleep(stub.delay_s)
                stub._respond(self, behavior)

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _respond(self, handler: BaseHTTPRequestHandler, behavior: str) -> None:
        if behavior == "hang":
            time.sleep(self.hang_s)
            behavior = "ok"
        if behavior == "http500":
            handler.send_response(500)
            handler.end_headers()
            handler.wfile.write(b"internal error")
            return
        if behavior == "ok":
            text = json.dumps(self.verdict)
        elif behavior == "prose":
            text = (
                "Looking at the flows, here is my assessment:\n```json\n"
                + json.dumps(self.verdict)
                + "\n```\nLet me know if you need more detail."
            )
        elif behavior == "garbage":
            text = "I cannot analyze this traffic right now."
        elif behavior == "malformed":
            text = json.dumps({"verdict": "fine", "note": "missing contract fields"})
        elif behavior == "empty":
            handler.send_response(200)
            handler.send_header("Content-Type", "application/json")
            handler.send_header("Content-Length", "0")
            handler.end_headers()
            return
        else:
            raise ValueError(f"unknown stub behavior: {behavior}")
        payload = json.dumps({"text": text}).encode()
        handler.send_response(200)
        handler.send_header("Content-Type", "application/json")
        handler.send_header("Content-Length", str(len(payload)))
        handler.end_headers()
        handler.wfile.write(payload)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/"

    def start(self) -> "StubLlmServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "StubLlmServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Run the stub LLM endpoint")
    parser.add_argument("--port", type=int, default=8899)
    parser.add_argument("--delay", type=float, default=0.0)
    parser.add_argument("--behaviors", default="ok", help="comma-separated behavior script")
    args = parser.parse_args(argv)
    server = StubLlmServer(
        behaviors=args.behaviors.split(","), delay_s=args.delay, port=args.port
    ).start()
    print(f"stub llm listening on {server.url}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
