/** Topology view: nodes on a ring, filled by role color. */

import { nodeColors, type ViewState } from './state.js';

export interface PlacedNode {
  address: string;
  x: number;
  y: number;
  color: string;
  label: string;
}

export function layoutRing(state: ViewState, width = 420, height = 320): PlacedNode[] {
  const addresses = Object.keys(state.nodes).sort(byLastOctet);
  const colors = nodeColors(state);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 2 - 40;
  return addresses.map((address, i) => {
    const angle = (2 * Math.PI * i) / Math.max(addresses.length, 1) - Math.PI / 2;
    return {
      address,
      x: cx + radius * Math.cos(angle),
      y: cy + radius * Math.sin(angle),
      color: colors[address],
      label: address.split('.').pop() ?? address,
    };
  });
}

function byLastOctet(a: string, b: string): number {
  const na = Number(a.split('.').pop());
  const nb = Number(b.split('.').pop());
  return na - nb || a.localeCompare(b);
}

export function renderTopologySvg(state: ViewState, width = 420, height = 320): string {
  const placed = layoutRing(state, width, height);
  if (placed.length === 0) {
    return `<svg viewBox="0 0 ${width} ${height}" class="topology">` +
      '<text x="20" y="40" class="placeholder">waiting for agents…</text></svg>';
  }
  const parts = placed.map((n) =>
    `<g class="node" data-address="${n.address}">` +
    `<circle cx="${n.x.toFixed(1)}" cy="${n.y.toFixed(1)}" r="17" class="node-${n.color}" />` +
    `<text x="${n.x.toFixed(1)}" y="${(n.y + 4).toFixed(1)}" text-anchor="middle" ` +
    `class="node-label">${n.label}</text>` +
    `<title>${n.address} (${state.nodes[n.address].role})</title></g>`,
  );
  return `<svg viewBox="0 0 ${width} ${height}" class="topology">${parts.join('')}</svg>`;
}
