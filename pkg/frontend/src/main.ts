/**
 * Dashboard bootstrap and DOM wiring.
 *
 * Live mode (default):   ?api=http://127.0.0.1:8700
 * Replay mode (no API):  ?replay=tests/fixtures/ddos8_events.json
 */

import { loadReplay, subscribeEvents } from './api.js';
import { latencyChartModel, renderLatencyChartSvg } from './charts.js';
import { ChatTranscript, httpChatPoster } from './chat.js';
import { renderAlerts, renderHealthTable, renderIncidents } from './panels.js';
import { applyAll, applyEnvelope, initialState, type ViewState } from './state.js';
import { renderTopologySvg } from './topology.js';

const LATENCY_THRESHOLD_MS = 200;

const params = new URLSearchParams(location.search);
const apiBase = (params.get('api') ?? 'http://127.0.0.1:8700').replace(/\/$/, '');
const replayUrl = params.get('replay');

const state: ViewState = initialState();
let selectedNode: string | null = null;

const el = (id: string) => document.getElementById(id)!;

function render(): void {
  el('alerts').innerHTML = renderAlerts(state);
  el('topology').innerHTML = renderTopologySvg(state);
  el('incidents').innerHTML = renderIncidents(state);
  el('health').innerHTML = renderHealthTable(state);
  el('chat-log').innerHTML = transcriptHtml();

  const addresses = Object.keys(state.metrics).sort();
  if (!selectedNode || !state.metrics[selectedNode]) selectedNode = addresses[0] ?? null;
  const series = selectedNode ? state.metrics[selectedNode] : [];
  const model = latencyChartModel(series ?? [], LATENCY_THRESHOLD_MS);
  el('chart').innerHTML = renderLatencyChartSvg(model);
  el('chart-title').textContent = selectedNode
    ? `latency, ${selectedNode} (threshold ${LATENCY_THRESHOLD_MS} ms` +
      `${model.crossedThreshold ? ', breached' : ''})`
    : 'latency (no node selected)';

  const picker = el('node-picker') as HTMLSelectElement;
  if (picker.options.length !== addresses.length) {
    picker.innerHTML = addresses
      .map((a) => `<option value="${a}"${a === selectedNode ? ' selected' : ''}>${a}</option>`)
      .join('');
  }
  el('status').textContent = state.stale
    ? 'connection lost, retrying — data may be stale'
    : `${state.eventsSeen} events`;
  el('status').className = state.stale ? 'stale' : 'live';
}

function transcriptHtml(): string {
  return transcript.entries
    .map((entry) => `<div class="bubble bubble-${entry.who}">${escapeHtml(entry.text)}</div>`)
    .join('');
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

const transcript = new ChatTranscript(httpChatPoster(apiBase));

function wireChat(): void {
  const form = el('chat-form') as HTMLFormElement;
  const input = el('chat-input') as HTMLInputElement;
  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    const question = input.value;
    input.value = '';
    await transcript.ask(question);
    render();
    el('chat-log').scrollTop = el('chat-log').scrollHeight;
  });
}

function wirePicker(): void {
  (el('node-picker') as HTMLSelectElement).addEventListener('change', (event) => {
    selectedNode = (event.target as HTMLSelectElement).value;
    render();
  });
}

async function boot(): Promise<void> {
  wireChat();
  wirePicker();
  if (replayUrl) {
    el('mode').textContent = `replay: ${replayUrl}`;
    const envelopes = await loadReplay(replayUrl);
    // Feed the recording in small batches so the timeline visibly builds up.
    let i = 0;
    const step = () => {
      const batch = envelopes.slice(i, i + 5);
      applyAll(state, batch);
      i += batch.length;
      render();
      if (i < envelopes.length) setTimeout(step, 120);
    };
    step();
    return;
  }
  el('mode').textContent = `live: ${apiBase}`;
  subscribeEvents(apiBase, {
    onEnvelope(envelope) {
      applyEnvelope(state, envelope);
      render();
    },
    onStale(stale) {
      state.stale = stale;
      render();
    },
  });
  render();
}

boot().catch((err) => {
  el('status').textContent = `failed to start: ${err}`;
  el('status').className = 'stale';
});
