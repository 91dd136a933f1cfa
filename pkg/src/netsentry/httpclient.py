"""HTTP client helpers: agent-side transport and the chat/event consumers."""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from typing import Iterator

from .model import Heartbeat, ThreatReport
from .schema import heartbeat_to_dict, report_to_dict


class ApiError(Exception):
    pass


def _post_json(url: str, payload: dict, timeout_s: float) -> dict:
    body = json.dumps(payload).encode()
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout_s) as resp:
            return json.loads(resp.read().decode() or "{}")
    except urllib.error.HTTPError as e:
        detail = e.read().decode(errors="replace")[:300]
        raise ApiError(f"HTTP {e.code} from {url}: {detail}") from e
    except (urllib.error.URLError, OSError, ValueError) as e:
        raise ApiError(f"{url}: {e}") from e


def get_json(url: str, timeout_s: float = 10.0):
    try:
        with urllib.request.urlopen(url, timeout=timeout_s) as resp:
            return json.loads(resp.read().decode())
    except (urllib.error.URLError, OSError, ValueError) as e:
        raise ApiError(f"{url}: {e}") from e


class HttpTransport:
    """ReportTransport speaking the controller's /v1 API."""

    def __init__(self, base_url: str, timeout_s: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def submit_report(self, report: ThreatReport) -> None:
        _post_json(f"{self.base_url}/v1/reports", report_to_dict(report), self.timeout_s)

    def submit_heartbeat(self, heartbeat: Heartbeat) -> None:
        _post_json(f"{self.base_url}/v1/heartbeats", heartbeat_to_dict(heartbeat),
                   self.timeout_s)


def chat(base_url: str, question: str, timeout_s: float = 30.0) -> str:
    answer = _post_json(f"{base_url.rstrip('/')}/v1/chat", {"question": question},
                        timeout_s)
    return answer.get("answer", "")


def stream_events(base_url: str, timeout_s: float = 30.0) -> Iterator[dict]:
    """Yield WireEnvelope dicts from the SSE stream until the socket closes."""
    url = f"{base_url.rstrip('/')}/v1/events"
    request = urllib.request.Request(url, headers={"Accept": "text/event-stream"})
    with urllib.request.urlopen(request, timeout=timeout_s) as resp:
        for raw in resp:
            line = raw.decode().strip()
            if line.startswith("data: "):
                yield json.loads(line[len("data: "):])
