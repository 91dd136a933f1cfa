/**
 * Controller API access: the SSE event stream with reconnect/backoff, and
 * replay-mode loading of a recorded envelope file.
 */

import type { WireEnvelope } from './types.js';

export interface StreamHandle {
  close(): void;
}

export interface StreamCallbacks {
  onEnvelope(envelope: WireEnvelope): void;
  onStale(stale: boolean): void;
}

export function subscribeEvents(apiBase: string, callbacks: StreamCallbacks): StreamHandle {
  let source: EventSource | null = null;
  let closed = false;
  let backoffMs = 1000;

  const connect = () => {
    if (closed) return;
    source = new EventSource(`${apiBase}/v1/events`);
    source.onopen = () => {
      backoffMs = 1000;
      callbacks.onStale(false);
    };
    source.onmessage = (event) => {
      try {
        callbacks.onEnvelope(JSON.parse(event.data) as WireEnvelope);
      } catch {
        // Ignore undecodable frames; the stream itself stays up.
      }
    };
    source.onerror = () => {
      callbacks.onStale(true);
      source?.close();
      if (!closed) {
        setTimeout(connect, backoffMs);
        backoffMs = Math.min(backoffMs * 2, 15000);
      }
    };
  };
  connect();
  return {
    close() {
      closed = true;
      source?.close();
    },
  };
}

export async function loadReplay(url: string): Promise<WireEnvelope[]> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`replay fetch failed: HTTP ${resp.status}`);
  const body = (await resp.json()) as WireEnvelope[];
  if (!Array.isArray(body)) throw new Error('replay file must be an envelope array');
  return body;
}
