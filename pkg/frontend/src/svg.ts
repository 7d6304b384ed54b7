/**
 * Minimal deterministic SVG chart output.
 *
 * Everything is emitted as plain strings with fixed precision so the
 * same input data always produces byte-identical files. No DOM, no
 * canvas; a chart is axes, tick labels, polyline/point series and a
 * legend inside one <g> per panel.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
  /** draw straight segments between points (default true) */
  line?: boolean;
  /** draw circle markers at each point (default false) */
  markers?: boolean;
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  /** force the y axis to start at zero (default true) */
  yFromZero?: boolean;
}

export const PANEL_WIDTH = 760;
export const PANEL_HEIGHT = 420;
const MARGIN = { top: 44, right: 24, bottom: 52, left: 64 };

// stable palette; variant names get fixed colors, everything else is
// assigned by sorted label order
const VARIANT_COLORS: Record<string, string> = {
  'pvss-bft': '#1f77b4',
  'baseline-bft': '#d62728',
  'longest-chain': '#2ca02c',
};
const FALLBACK = ['#9467bd', '#ff7f0e', '#8c564b', '#e377c2', '#7f7f7f', '#17becf'];

export function seriesColor(label: string, allLabels: string[]): string {
  const base = label.split(' ')[0];
  if (base in VARIANT_COLORS) return VARIANT_COLORS[base];
  const others = [...allLabels].sort().filter(l => !(l.split(' ')[0] in VARIANT_COLORS));
  return FALLBACK[others.indexOf(label) % FALLBACK.length];
}

const fmt = (v: number): string => {
  const s = v.toFixed(2);
  return s === '-0.00' ? '0.00' : s;
};

/** ~`count` round tick values covering [lo, hi] */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const norm = rawStep / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function tickText(v: number): string {
  if (Number.isInteger(v)) return String(v);
  const s = v.toPrecision(3);
  return String(Number(s));
}

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

function renderPanel(spec: PanelSpec, yOffset: number): string {
  const xs = spec.series.flatMap(s => s.points.map(p => p.x));
  const ys = spec.series.flatMap(s => s.points.map(p => p.y));
  if (xs.length === 0) {
    throw new Error(`panel '${spec.title}' has no points`);
  }
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = spec.yFromZero === false ? Math.min(...ys) : Math.min(0, ...ys);
  let yHi = Math.max(...ys);
  if (xHi === xLo) {
    xLo -= 1;
    xHi += 1;
  }
  if (yHi === yLo) yHi = yLo + 1;
  const plotW = PANEL_WIDTH - MARGIN.left - MARGIN.right;
  const plotH = PANEL_HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(`<g transform="translate(0,${yOffset})">`);
  parts.push(
    `<text x="${PANEL_WIDTH / 2}" y="24" text-anchor="middle" font-size="16" ` +
      `font-family="sans-serif">${esc(spec.title)}</text>`,
  );
  // frame
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333" stroke-width="1"/>`,
  );
  // x ticks
  for (const t of niceTicks(xLo, xHi, 6)) {
    const px = fmt(sx(t));
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top + plotH}" x2="${px}" ` +
        `y2="${MARGIN.top + plotH + 5}" stroke="#333"/>`,
    );
    parts.push(
      `<text x="${px}" y="${MARGIN.top + plotH + 20}" text-anchor="middle" ` +
        `font-size="11" font-family="sans-serif">${tickText(t)}</text>`,
    );
  }
  // y ticks with light grid
  for (const t of niceTicks(yLo, yHi, 5)) {
    const py = fmt(sy(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" ` +
        `stroke="#ddd" stroke-width="0.5"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="11" font-family="sans-serif">${tickText(t)}</text>`,
    );
  }
  // axis labels
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${PANEL_HEIGHT - 12}" text-anchor="middle" ` +
      `font-size="13" font-family="sans-serif">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" ` +
      `font-family="sans-serif" transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">` +
      `${esc(spec.yLabel)}</text>`,
  );
  // series
  const labels = spec.series.map(s => s.label);
  spec.series.forEach(s => {
    const color = seriesColor(s.label, labels);
    const pts = s.points;
    if (s.line !== false && pts.length > 1) {
      const d = pts.map(p => `${fmt(sx(p.x))},${fmt(sy(p.y))}`).join(' ');
      parts.push(
        `<polyline points="${d}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
      );
    }
    if (s.markers || pts.length === 1) {
      for (const p of pts) {
        parts.push(
          `<circle cx="${fmt(sx(p.x))}" cy="${fmt(sy(p.y))}" r="3" fill="${color}"/>`,
        );
      }
    }
  });
  // legend, top-right inside the frame
  spec.series.forEach((s, i) => {
    const color = seriesColor(s.label, labels);
    const ly = MARGIN.top + 14 + i * 16;
    const lx = MARGIN.left + plotW - 170;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${lx + 28}" y="${ly + 4}" font-size="12" font-family="sans-serif">` +
        `${esc(s.label)}</text>`,
    );
  });
  parts.push('</g>');
  return parts.join('\n');
}

/** Stack panels vertically into one standalone SVG document. */
export function renderSvg(panels: PanelSpec[]): string {
  const height = PANEL_HEIGHT * panels.length;
  const body = panels.map((p, i) => renderPanel(p, i * PANEL_HEIGHT)).join('\n');
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${PANEL_WIDTH}" height="${height}" ` +
    `viewBox="0 0 ${PANEL_WIDTH} ${height}">\n` +
    `<rect width="${PANEL_WIDTH}" height="${height}" fill="white"/>\n` +
    `${body}\n</svg>\n`
  );
}
