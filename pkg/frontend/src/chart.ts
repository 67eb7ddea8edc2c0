// Step chart of total keyword count over time. Observations are discrete
// crawls, so the line holds each value until the next check (no
// interpolation). Closed defacement-to-fix cycles are shaded behind it.

import type { Cycle, TimelinePoint } from "./types.js";

const WIDTH = 820;
const HEIGHT = 220;
const PAD_LEFT = 44;
const PAD_RIGHT = 16;
const PAD_TOP = 14;
const PAD_BOTTOM = 28;

export interface ChartGeometry {
  x: (iso: string) => number;
  y: (total: number) => number;
}

export function chartGeometry(series: TimelinePoint[]): ChartGeometry {
  const times = series.map((p) => new Date(p.at).getTime());
  const t0 = Math.min(...times);
  const t1 = Math.max(...times);
  const span = Math.max(t1 - t0, 1);
  const peak = Math.max(1, ...series.map((p) => p.total));
  const plotW = WIDTH - PAD_LEFT - PAD_RIGHT;
  const plotH = HEIGHT - PAD_TOP - PAD_BOTTOM;
  return {
    x: (iso) => PAD_LEFT + ((new Date(iso).getTime() - t0) / span) * plotW,
    y: (total) => PAD_TOP + plotH - (total / peak) * plotH,
  };
}

export function stepChartSvg(series: TimelinePoint[], cycles: Cycle[]): string {
  if (series.length === 0) {
    return `<svg class="chart" viewBox="0 0 ${WIDTH} ${HEIGHT}"><text x="${WIDTH / 2}" y="${HEIGHT / 2}" text-anchor="middle" class="chart-empty">no observations yet</text></svg>`;
  }
  const geo = chartGeometry(series);
  const baseline = HEIGHT - PAD_BOTTOM;

  const shading = cycles
    .map((cycle) => {
      const x0 = geo.x(cycle.start_at);
      const x1 = geo.x(cycle.fixed_at);
      return `<rect class="cycle" x="${x0.toFixed(1)}" y="${PAD_TOP}" width="${Math.max(x1 - x0, 1).toFixed(1)}" height="${baseline - PAD_TOP}"/>`;
    })
    .join("");

  const steps: string[] = [];
  series.forEach((point, index) => {
    const x = geo.x(point.at);
    const y = geo.y(point.total);
    steps.push(index === 0 ? `M ${x.toFixed(1)} ${y.toFixed(1)}` : `V ${y.toFixed(1)}`);
    const nextX = index + 1 < series.length ? geo.x(series[index + 1].at) : WIDTH - PAD_RIGHT;
    steps.push(`H ${nextX.toFixed(1)}`);
  });

  const points = series
    .map((point) => {
      const x = geo.x(point.at).toFixed(1);
      const y = geo.y(point.total).toFixed(1);
      const cls = point.reachable ? "obs" : "obs unreachable";
      return `<circle class="${cls}" data-total="${point.total}" cx="${x}" cy="${y}" r="3.5"><title>${point.at}: ${point.total}</title></circle>`;
    })
    .join("");

  const peak = Math.max(1, ...series.map((p) => p.total));
  return [
    `<svg class="chart" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="keyword total over time">`,
    shading,
    `<line class="axis" x1="${PAD_LEFT}" y1="${baseline}" x2="${WIDTH - PAD_RIGHT}" y2="${baseline}"/>`,
    `<text class="tick" x="${PAD_LEFT - 6}" y="${baseline}" text-anchor="end">0</text>`,
    `<text class="tick" x="${PAD_LEFT - 6}" y="${PAD_TOP + 4}" text-anchor="end">${peak}</text>`,
    `<path class="step" d="${steps.join(" ")}"/>`,
    points,
    `</svg>`,
  ].join("");
}
