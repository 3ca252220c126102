import type { AccuracyPartition, OverindexRow } from './types.js';

// Both charts are plotted straight from service-reported numbers; no value
// shown here is computed client-side.

const WIDTH = 420;
const HEIGHT = 260;
const MARGIN = { top: 16, right: 16, bottom: 36, left: 44 };

export interface AccuracyPoint {
  percentile: number;
  population: string;
  cieAcc: number;
}

/** Flatten a dashboard accuracy section into plottable points. Keys of the
 * per-population map are "all" plus "p<percentile>" audit-set entries. */
export function accuracyPoints(
  accuracy: Record<string, Record<string, AccuracyPartition>>,
): AccuracyPoint[] {
  const points: AccuracyPoint[] = [];
  for (const [population, parts] of Object.entries(accuracy)) {
    for (const [key, part] of Object.entries(parts)) {
      const match = /^p(\d+(?:\.\d+)?)$/.exec(key);
      if (match && part.cie_acc !== null) {
        points.push({ percentile: Number(match[1]), population, cieAcc: part.cie_acc });
      }
    }
  }
  points.sort((a, b) => a.population.localeCompare(b.population) || a.percentile - b.percentile);
  return points;
}

/** Audit-set accuracy vs percentile threshold, one polyline per population. */
export function accuracyChartSvg(points: AccuracyPoint[]): string {
  const populations = [...new Set(points.map((p) => p.population))];
  const xs = points.map((p) => p.percentile);
  const xMin = Math.min(...xs, 90);
  const xMax = Math.max(...xs, 99);
  const x = (v: number) => scale(v, xMin, xMax, MARGIN.left, WIDTH - MARGIN.right);
  const y = (v: number) => scale(v, 0, 100, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [axes('percentile threshold', 'audit-set accuracy (%)')];
  populations.forEach((population, i) => {
    const line = points
      .filter((p) => p.population === population)
      .map((p) => `${x(p.percentile).toFixed(1)},${y(p.cieAcc).toFixed(1)}`)
      .join(' ');
    parts.push(`<polyline class="series series-${i}" fill="none" points="${line}"/>`);
    for (const p of points.filter((pt) => pt.population === population)) {
      parts.push(
        `<circle class="series-${i}" cx="${x(p.percentile).toFixed(1)}" cy="${y(p.cieAcc).toFixed(1)}" r="3">` +
          `<title>${escapeXml(population)} p${p.percentile}: ${p.cieAcc.toFixed(2)}%</title></circle>`,
      );
    }
    parts.push(
      `<text class="legend series-${i}" x="${MARGIN.left + 8}" y="${MARGIN.top + 14 * (i + 1)}">` +
        `${escapeXml(population)}</text>`,
    );
  });
  return svg(parts);
}

/** Train-set share vs audit-set share per attribute; the diagonal marks
 * parity, points above it over-index. */
export function overindexChartSvg(rows: OverindexRow[]): string {
  const max = Math.max(...rows.map((r) => Math.max(r.train_fraction, r.cie_fraction)), 0.05);
  const x = (v: number) => scale(v, 0, max, MARGIN.left, WIDTH - MARGIN.right);
  const y = (v: number) => scale(v, 0, max, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [axes('training-set fraction', 'audit-set fraction')];
  parts.push(
    `<line class="parity" x1="${x(0)}" y1="${y(0)}" x2="${x(max).toFixed(1)}" y2="${y(max).toFixed(1)}"/>`,
  );
  for (const row of rows) {
    const ratio = row.representation_ratio === null ? 'undef' : `${row.representation_ratio.toFixed(2)}x`;
    parts.push(
      `<circle class="attr-point" cx="${x(row.train_fraction).toFixed(1)}" cy="${y(row.cie_fraction).toFixed(1)}" r="4">` +
        `<title>${escapeXml(row.attribute)}: ${ratio}</title></circle>`,
      `<text class="attr-label" x="${(x(row.train_fraction) + 6).toFixed(1)}" y="${(y(row.cie_fraction) - 6).toFixed(1)}">` +
        `${escapeXml(row.attribute)}</text>`,
    );
  }
  return svg(parts);
}

function scale(v: number, d0: number, d1: number, r0: number, r1: number): number {
  if (d1 === d0) return (r0 + r1) / 2;
  return r0 + ((v - d0) / (d1 - d0)) * (r1 - r0);
}

function axes(xLabel: string, yLabel: string): string {
  const x0 = MARGIN.left;
  const y0 = HEIGHT - MARGIN.bottom;
  return (
    `<line class="axis" x1="${x0}" y1="${y0}" x2="${WIDTH - MARGIN.right}" y2="${y0}"/>` +
    `<line class="axis" x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}"/>` +
    `<text class="axis-label" x="${(x0 + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 8}" text-anchor="middle">${escapeXml(xLabel)}</text>` +
    `<text class="axis-label" x="12" y="${(MARGIN.top + y0) / 2}" transform="rotate(-90 12 ${(MARGIN.top + y0) / 2})" text-anchor="middle">${escapeXml(yLabel)}</text>`
  );
}

function svg(parts: string[]): string {
  return `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" xmlns="http://www.w3.org/2000/svg">${parts.join('')}</svg>`;
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
