import { describe, expect, it } from 'vitest';

import {
  DEFAULT_LAYOUT,
  coverageSeries,
  discoveriesSeries,
  precisionSeries,
  svgChart,
  toPath,
} from '../src/chart.js';
import type { IterationReport } from '../src/types.js';

function report(iteration: number, precision: number, discovered: number, coverage: number | null): IterationReport {
  return {
    iteration,
    presented: 10,
    approved: Math.round(precision * 10),
    precision,
    cumulative_discovered: discovered,
    coverage,
  };
}

const REPORTS = [
  report(1, 0.5, 5, 0.1),
  report(2, 0.4, 9, 0.2),
  report(3, 0.3, 12, 0.3),
  report(4, 0.2, 14, 0.5),
  report(5, 0.1, 15, 0.5),
];

describe('series extraction', () => {
  it('five reports give five points per series', () => {
    expect(precisionSeries(REPORTS).points).toHaveLength(5);
    expect(discoveriesSeries(REPORTS).points).toHaveLength(5);
    expect(coverageSeries(REPORTS).points).toHaveLength(5);
  });

  it('null coverage rows are dropped from the coverage series', () => {
    const withNulls = [...REPORTS, report(6, 0.1, 15, null)];
    expect(coverageSeries(withNulls).points).toHaveLength(5);
  });

  it('every plotted number comes from the reports verbatim', () => {
    const points = precisionSeries(REPORTS).points;
    expect(points.map((p) => p.y)).toEqual(REPORTS.map((r) => r.precision));
    expect(points.map((p) => p.x)).toEqual(REPORTS.map((r) => r.iteration));
  });
});

describe('toPath', () => {
  it('monotone series renders a non-increasing y pixel sequence', () => {
    // cumulative discoveries grow, so pixel y (inverted axis) must not grow
    const path = toPath(discoveriesSeries(REPORTS));
    const ys = [...path.matchAll(/[ML][\d.]+,([\d.]+)/g)].map((m) => Number(m[1]));
    for (let i = 1; i < ys.length; i++) {
      expect(ys[i]).toBeLessThanOrEqual(ys[i - 1]);
    }
  });

  it('points stay inside the padded viewport', () => {
    const path = toPath(precisionSeries(REPORTS), DEFAULT_LAYOUT, 1.0);
    for (const [, x, y] of path.matchAll(/[ML]([\d.]+),([\d.]+)/g)) {
      expect(Number(x)).toBeGreaterThanOrEqual(DEFAULT_LAYOUT.padding);
      expect(Number(x)).toBeLessThanOrEqual(DEFAULT_LAYOUT.width - DEFAULT_LAYOUT.padding);
      expect(Number(y)).toBeGreaterThanOrEqual(DEFAULT_LAYOUT.padding - 1e-9);
      expect(Number(y)).toBeLessThanOrEqual(DEFAULT_LAYOUT.height - DEFAULT_LAYOUT.padding + 1e-9);
    }
  });

  it('empty history yields an empty path and a placeholder chart', () => {
    expect(toPath(precisionSeries([]))).toBe('');
    const svg = svgChart([precisionSeries([])]);
    expect(svg).toContain('<svg');
    expect(svg).not.toContain('<path');
  });

  it('single-point series still renders', () => {
    const path = toPath(precisionSeries([REPORTS[0]]));
    expect(path.startsWith('M')).toBe(true);
  });
});

describe('svgChart', () => {
  it('draws one path per non-empty series plus axes', () => {
    const svg = svgChart([discoveriesSeries(REPORTS), coverageSeries(REPORTS)]);
    expect([...svg.matchAll(/<path/g)]).toHaveLength(2);
    expect([...svg.matchAll(/class="axis"/g)]).toHaveLength(2);
  });
});
