/** Wire types mirroring the controller's /v1 JSON (schema_version 1). */

export type EnvelopeKind =
  | 'report'
  | 'heartbeat'
  | 'incident'
  | 'health'
  | 'chat_request'
  | 'chat_response';

export interface WireEnvelope {
  kind: EnvelopeKind;
  payload: Record<string, unknown>;
  sent_at: number;
  schema_version: string;
}

export interface TriggerDigest {
  fired: boolean;
  breached_metric: 'latency' | 'jitter' | 'loss' | null;
  observed: number;
  threshold: number;
}

export interface ReportDigest {
  report_id: string;
  node: string;
  category: string;
  confidence: number;
  packet_count: number;
  window: { start_us: number; end_us: number };
  trigger?: TriggerDigest;
  summary?: string;
}

export interface HeartbeatMsg {
  agent_id: string;
  address: string;
  at_us: number;
  cycles_completed: number;
  reports_sent: number;
  queue_depth: number;
  heartbeat_interval_s?: number;
  sample?: {
    at_us: number;
    latency_ms: number;
    jitter_ms: number;
    packet_loss_pct: number;
    throughput_kbps: number;
  } | null;
}

export type Role = 'attacker' | 'victim' | 'scanner' | 'normal';

export interface IncidentMsg {
  incident_id: string;
  window: { start_us: number; end_us: number };
  category: string;
  confidence: number;
  roles: Record<string, Role>;
  supporting_reports: string[];
  recommendation: { advisory_actions: string[]; urgency: string };
  narrative: string;
}

export interface HealthMsg {
  agent_id: string;
  last_heartbeat_at_us: number;
  status: 'healthy' | 'delayed' | 'missing';
}

export interface MetricPoint {
  at_us: number;
  latency_ms: number;
  packet_loss_pct: number;
  throughput_kbps: number;
}
