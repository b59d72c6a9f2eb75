/** Minimal SVG line-chart geometry: pure functions from reports to paths. */

import type { IterationReport } from './types.js';

export interface Series {
  name: string;
  points: Array<{ x: number; y: number }>;
}

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 420, height: 160, padding: 28 };

export function precisionSeries(reports: IterationReport[]): Series {
  return {
    name: 'precision',
    points: reports.map((r) => ({ x: r.iteration, y: r.precision })),
  };
}

export function coverageSeries(reports: IterationReport[]): Series {
  return {
    name: 'coverage',
    points: reports.filter((r) => r.coverage !== null).map((r) => ({ x: r.iteration, y: r.coverage as number })),
  };
}

export function discoveriesSeries(reports: IterationReport[]): Series {
  return {
    name: 'cumulative discoveries',
    points: reports.map((r) => ({ x: r.iteration, y: r.cumulative_discovered })),
  };
}

/** Map data points onto pixel coordinates; y axis always starts at 0. */
export function toPath(series: Series, layout: ChartLayout = DEFAULT_LAYOUT, yMax?: number): string {
  const { points } = series;
  if (points.length === 0) {
    return '';
  }
  const xs = points.map((p) => p.x);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const top = yMax ?? Math.max(...points.map((p) => p.y), 1e-9);
  const innerW = layout.width - 2 * layout.padding;
  const innerH = layout.height - 2 * layout.padding;
  const spanX = xMax - xMin || 1;
  const px = (x: number) => layout.padding + ((x - xMin) / spanX) * innerW;
  const py = (y: number) => layout.height - layout.padding - (y / top) * innerH;
  return points
    .map((p, i) => `${i === 0 ? 'M' : 'L'}${px(p.x).toFixed(1)},${py(p.y).toFixed(1)}`)
    .join(' ');
}

export function svgChart(seriesList: Series[], layout: ChartLayout = DEFAULT_LAYOUT, yMax?: number): string {
  const colors = ['#2563eb', '#f59e0b', '#10b981'];
  const axis =
    `<line x1="${layout.padding}" y1="${layout.height - layout.padding}" ` +
    `x2="${layout.width - layout.padding}" y2="${layout.height - layout.padding}" class="axis"/>` +
    `<line x1="${layout.padding}" y1="${layout.padding}" ` +
    `x2="${layout.padding}" y2="${layout.height - layout.padding}" class="axis"/>`;
  const paths = seriesList
    .filter((s) => s.points.length > 0)
    .map(
      (s, i) =>
        `<path d="${toPath(s, layout, yMax)}" fill="none" stroke="${colors[i % colors.length]}" stroke-width="1.5"/>`,
    )
    .join('');
  const legend = seriesList
    .map(
      (s, i) =>
        `<text x="${layout.padding + 4 + i * 140}" y="${layout.padding - 10}" fill="${colors[i % colors.length]}" class="legend">${s.name}</text>`,
    )
    .join('');
  return (
    `<svg viewBox="0 0 ${layout.width} ${layout.height}" xmlns="http://www.w3.org/2000/svg">` +
    `${axis}${paths}${legend}</svg>`
  );
}
