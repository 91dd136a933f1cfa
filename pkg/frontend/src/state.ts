/**
 * Dashboard view state: a pure reducer over WireEnvelopes.
 *
 * Everything rendered derives from server-sent data; there is no detection
 * logic here. Given the same envelope sequence, the resulting view model is
 * identical, which is what makes replay snapshots meaningful.
 */

import type {
  HealthMsg,
  HeartbeatMsg,
  IncidentMsg,
  MetricPoint,
  ReportDigest,
  Role,
  WireEnvelope,
} from './types.js';

export type ColorToken = 'red' | 'amber' | 'green' | 'gray';

export interface NodeView {
  address: string;
  agentId?: string;
  role: Role;
  health: 'healthy' | 'delayed' | 'missing' | 'unknown';
  lastCategory?: string;
  lastReportId?: string;
  reportCount: number;
}

export interface AlertBanner {
  key: string;
  node: string;
  metric: string;
  observed: number;
  threshold: number;
  atUs: number;
}

export interface ChatEntry {
  who: 'operator' | 'controller' | 'error';
  text: string;
}

export interface ViewState {
  nodes: Record<string, NodeView>;
  agentToAddress: Record<string, string>;
  incidents: Record<string, IncidentMsg>;
  alerts: AlertBanner[];
  metrics: Record<string, MetricPoint[]>;
  chat: ChatEntry[];
  eventsSeen: number;
  stale: boolean;
}

export const METRICS_KEEP = 600;
export const ALERTS_KEEP = 50;

export function initialState(): ViewState {
  return {
    nodes: {},
    agentToAddress: {},
    incidents: {},
    alerts: [],
    metrics: {},
    chat: [],
    eventsSeen: 0,
    stale: false,
  };
}

function ensureNode(state: ViewState, address: string): NodeView {
  if (!state.nodes[address]) {
    state.nodes[address] = {
      address,
      role: 'normal',
      health: 'unknown',
      reportCount: 0,
    };
  }
  return state.nodes[address];
}

export function applyEnvelope(state: ViewState, envelope: WireEnvelope): ViewState {
  state.eventsSeen += 1;
  switch (envelope.kind) {
    case 'report': {
      const digest = envelope.payload as unknown as ReportDigest;
      const node = ensureNode(state, digest.node);
      node.lastCategory = digest.category;
      node.lastReportId = digest.report_id;
      node.reportCount += 1;
      const trigger = digest.trigger;
      if (trigger && trigger.fired && trigger.breached_metric) {
        state.alerts.push({
          key: `${digest.report_id}:${trigger.breached_metric}`,
          node: digest.node,
          metric: trigger.breached_metric,
          observed: trigger.observed,
          threshold: trigger.threshold,
          atUs: digest.window.start_us,
        });
        if (state.alerts.length > ALERTS_KEEP) {
          state.alerts.splice(0, state.alerts.length - ALERTS_KEEP);
        }
      }
      break;
    }
    case 'heartbeat': {
      const hb = envelope.payload as unknown as HeartbeatMsg;
      const node = ensureNode(state, hb.address);
      node.agentId = hb.agent_id;
      if (node.health === 'unknown') node.health = 'healthy';
      state.agentToAddress[hb.agent_id] = hb.address;
      if (hb.sample) {
        const series = (state.metrics[hb.address] ??= []);
        series.push({
          at_us: hb.at_us,
          latency_ms: hb.sample.latency_ms,
          packet_loss_pct: hb.sample.packet_loss_pct,
          throughput_kbps: hb.sample.throughput_kbps,
        });
        if (series.length > METRICS_KEEP) series.splice(0, series.length - METRICS_KEEP);
      }
      break;
    }
    case 'incident': {
      const incident = envelope.payload as unknown as IncidentMsg;
      state.incidents[incident.incident_id] = incident;
      applyLatestRoles(state);
      break;
    }
    case 'health': {
      const health = envelope.payload as unknown as HealthMsg;
      const address = state.agentToAddress[health.agent_id];
      if (address) ensureNode(state, address).health = health.status;
      break;
    }
    case 'chat_request':
      state.chat.push({ who: 'operator', text: String(envelope.payload.question ?? '') });
      break;
    case 'chat_response':
      state.chat.push({ who: 'controller', text: String(envelope.payload.answer ?? '') });
      break;
  }
  return state;
}

/** Node roles always reflect the most recent incident, per node. */
function applyLatestRoles(state: ViewState): void {
  for (const node of Object.values(state.nodes)) node.role = 'normal';
  const incidents = Object.values(state.incidents).sort(
    (a, b) => Number(a.incident_id.split('-')[1]) - Number(b.incident_id.split('-')[1]),
  );
  for (const incident of incidents) {
    for (const [address, role] of Object.entries(incident.roles)) {
      ensureNode(state, address).role = role;
    }
  }
}

export function roleColor(role: Role): ColorToken {
  switch (role) {
    case 'attacker':
    case 'scanner':
      return 'red';
    case 'victim':
      return 'amber';
    default:
      return 'green';
  }
}

/** Snapshot of the topology coloring: address -> color token. */
export function nodeColors(state: ViewState): Record<string, ColorToken> {
  const colors: Record<string, ColorToken> = {};
  for (const node of Object.values(state.nodes)) {
    colors[node.address] = node.health === 'missing' ? 'gray' : roleColor(node.role);
  }
  return colors;
}

export function applyAll(state: ViewState, envelopes: WireEnvelope[]): ViewState {
  for (const envelope of envelopes) applyEnvelope(state, envelope);
  return state;
}

export function openIncidents(state: ViewState): IncidentMsg[] {
  return Object.values(state.incidents).sort(
    (a, b) => Number(a.incident_id.split('-')[1]) - Number(b.incident_id.split('-')[1]),
  );
}
