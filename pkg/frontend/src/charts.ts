/** Pure geometry for the latency chart: series -> SVG polyline model. */

import type { MetricPoint } from './types.js';

export interface ChartModel {
  points: string;             // "x,y x,y ..." polyline
  thresholdY: number;         // y pixel of the threshold line
  maxValue: number;           // y-axis top (ms)
  crossedThreshold: boolean;  // any sample above the threshold
  lastValue: number | null;
}

export function latencyChartModel(
  series: MetricPoint[],
  thresholdMs: number,
  width = 560,
  height = 150,
): ChartModel {
  if (series.length === 0) {
    return {
      points: '',
      thresholdY: height / 2,
      maxValue: thresholdMs * 2,
      crossedThreshold: false,
      lastValue: null,
    };
  }
  const values = series.map((p) => p.latency_ms);
  const maxValue = Math.max(thresholdMs * 1.5, ...values) * 1.05;
  const t0 = series[0].at_us;
  const t1 = Math.max(series[series.length - 1].at_us, t0 + 1);
  const x = (at: number) => ((at - t0) / (t1 - t0)) * width;
  const y = (v: number) => height - (v / maxValue) * height;
  const points = series
    .map((p) => `${x(p.at_us).toFixed(1)},${y(p.latency_ms).toFixed(1)}`)
    .join(' ');
  return {
    points,
    thresholdY: y(thresholdMs),
    maxValue,
    crossedThreshold: values.some((v) => v > thresholdMs),
    lastValue: values[values.length - 1],
  };
}

export function renderLatencyChartSvg(model: ChartModel, width = 560, height = 150): string {
  const threshold = `<line x1="0" y1="${model.thresholdY.toFixed(1)}" x2="${width}" ` +
    `y2="${model.thresholdY.toFixed(1)}" class="threshold-line" />`;
  const line = model.points
    ? `<polyline points="${model.points}" class="latency-line" fill="none" />`
    : '<text x="10" y="20" class="placeholder">no samples yet</text>';
  return `<svg viewBox="0 0 ${width} ${height}" class="latency-chart">${threshold}${line}</svg>`;
}
