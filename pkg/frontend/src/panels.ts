/** HTML fragments for the incident feed, health table, and alert banners. */

import { openIncidents, type ViewState } from './state.js';

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function renderAlerts(state: ViewState): string {
  if (state.alerts.length === 0) return '';
  const latest = state.alerts.slice(-4).reverse();
  return latest
    .map((a) =>
      `<div class="alert-banner">threshold breach on ${esc(a.node)}: ` +
      `${esc(a.metric)} ${a.observed.toFixed(1)} against ${a.threshold.toFixed(1)}</div>`)
    .join('');
}

export function renderIncidents(state: ViewState): string {
  const incidents = openIncidents(state);
  if (incidents.length === 0) {
    return '<p class="placeholder">no incidents</p>';
  }
  return incidents
    .map((incident) => {
      const roles = Object.entries(incident.roles)
        .filter(([, role]) => role !== 'normal')
        .map(([address, role]) => `<span class="role role-${role}">${esc(address)} ${role}</span>`)
        .join(' ');
      const actions = incident.recommendation.advisory_actions
        .map((a) => `<li>${esc(a)}</li>`)
        .join('');
      return (
        `<article class="incident urgency-${esc(incident.recommendation.urgency)}">` +
        `<header>${esc(incident.incident_id)} · ${esc(incident.category)} · ` +
        `confidence ${incident.confidence.toFixed(2)}</header>` +
        `<p>${roles}</p><p class="narrative">${esc(incident.narrative)}</p>` +
        `<ul class="advisory">${actions}</ul></article>`
      );
    })
    .join('');
}

export function renderHealthTable(state: ViewState): string {
  const nodes = Object.values(state.nodes).sort((a, b) => a.address.localeCompare(b.address));
  if (nodes.length === 0) return '<p class="placeholder">no agents yet</p>';
  const rows = nodes
    .map((n) =>
      `<tr><td>${esc(n.agentId ?? '?')}</td><td>${esc(n.address)}</td>` +
      `<td class="health-${n.health}">${n.health}</td>` +
      `<td>${esc(n.lastCategory ?? '-')}</td><td>${n.reportCount}</td></tr>`)
    .join('');
  return (
    '<table class="health"><thead><tr><th>agent</th><th>address</th>' +
    '<th>health</th><th>last verdict</th><th>reports</th></tr></thead>' +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderChat(state: ViewState): string {
  return state.chat
    .map((entry) => `<div class="bubble bubble-${entry.who}">${esc(entry.text)}</div>`)
    .join('');
}
