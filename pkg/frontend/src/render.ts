/**
 * Pure view builders: state + API payloads in, HTML/SVG strings out.
 *
 * Keeping rendering free of DOM and fetch side effects means the whole UI
 * surface is unit-testable on fixture payloads; app.ts only mounts these
 * strings and routes events. Charts draw one bar per bucket with a CI
 * whisker when the backend supplied an interval (small buckets have none).
 */

import type {
  BucketRow,
  ComparisonReport,
  ExamplesPage,
  SingleAnalysisReport,
  SystemEntry,
} from "./types.js";
import type { ViewState } from "./state.js";
import { SUPPORTED_METRICS } from "./state.js";

const CHART_HEIGHT = 160;
const BAR_WIDTH = 34;
const BAR_GAP = 16;
const CHART_PAD = 28;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function formatValue(value: number): string {
  return Math.abs(value) >= 100 ? value.toFixed(1) : value.toFixed(4);
}

// ============================================================================
// shared chrome
// ============================================================================

export function renderMetricSwitcher(metrics: string[], active: string): string {
  const known = metrics.filter((m) => SUPPORTED_METRICS.includes(m));
  const buttons = known
    .map((m) => {
      const cls = m === active ? "metric-btn active" : "metric-btn";
      return `<button class="${cls}" data-action="metric" data-metric="${escapeHtml(m)}">${escapeHtml(m)}</button>`;
    })
    .join("");
  return `<nav class="metric-switcher" aria-label="metric">${buttons}</nav>`;
}

export function renderErrorBanner(code: string, message: string): string {
  return (
    `<div class="error-banner" role="alert" data-code="${escapeHtml(code)}">` +
    `<strong>${escapeHtml(code)}</strong> ${escapeHtml(message)}</div>`
  );
}

export function renderUploadPrompt(): string {
  return `
    <section class="upload-prompt">
      <h2>No systems yet</h2>
      <p>Upload a system-output file to start analyzing.</p>
      <textarea id="upload-text" rows="6"
        placeholder="paste a system-output file (one JSON record per line)"></textarea>
      <button data-action="upload">Upload</button>
    </section>`;
}

export function renderSystemList(entries: SystemEntry[], selected: string[]): string {
  if (entries.length === 0) return renderUploadPrompt();
  const rows = entries
    .map((e) => {
      const checked = selected.includes(e.id) ? " checked" : "";
      return `
        <tr>
          <td><input type="checkbox" data-action="toggle-system"
               data-id="${escapeHtml(e.id)}"${checked}></td>
          <td class="mono">${escapeHtml(e.id.slice(0, 12))}</td>
          <td>${escapeHtml(e.header.system_name)}</td>
          <td>${escapeHtml(e.header.dataset_name)}</td>
          <td>${escapeHtml(e.header.rank_basis)}</td>
          <td class="num">${e.record_count}</td>
        </tr>`;
    })
    .join("");
  return `
    <section class="system-list">
      <h2>Systems</h2>
      <table>
        <thead><tr><th></th><th>id</th><th>system</th><th>dataset</th>
          <th>ranks</th><th>records</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
      <button data-action="analyze" class="primary">Analyze selection</button>
      ${renderUploadPrompt()}
    </section>`;
}

// ============================================================================
// single analysis
// ============================================================================

function axisMax(buckets: BucketRow[], metric: string): number {
  if (metric !== "mr") return 1.0;
  let top = 1.0;
  for (const b of buckets) {
    const interval = b.intervals[metric];
    top = Math.max(top, interval ? interval.high : b.values[metric]);
  }
  return top * 1.1;
}

function barChart(feature: string, buckets: BucketRow[], metric: string): string {
  const max = axisMax(buckets, metric);
  const width = CHART_PAD * 2 + buckets.length * (BAR_WIDTH + BAR_GAP);
  const parts: string[] = [];
  buckets.forEach((bucket, i) => {
    const value = bucket.values[metric];
    const x = CHART_PAD + i * (BAR_WIDTH + BAR_GAP);
    const h = Math.max(1, (value / max) * CHART_HEIGHT);
    const y = CHART_HEIGHT - h + 10;
    parts.push(
      `<rect class="bar" data-action="drill" data-feature="${escapeHtml(feature)}"` +
        ` data-label="${escapeHtml(bucket.label)}" data-value="${value}"` +
        ` x="${x}" y="${y.toFixed(1)}" width="${BAR_WIDTH}" height="${h.toFixed(1)}">` +
        `<title>${escapeHtml(bucket.label)}: ${formatValue(value)} (n=${bucket.n})</title></rect>`,
    );
    const interval = bucket.intervals[metric];
    if (interval) {
      const cx = x + BAR_WIDTH / 2;
      const yLow = CHART_HEIGHT - (interval.low / max) * CHART_HEIGHT + 10;
      const yHigh = CHART_HEIGHT - (interval.high / max) * CHART_HEIGHT + 10;
      parts.push(
        `<g class="whisker" data-low="${interval.low}" data-high="${interval.high}">` +
          `<line x1="${cx}" x2="${cx}" y1="${yHigh.toFixed(1)}" y2="${yLow.toFixed(1)}"/>` +
          `<line x1="${cx - 6}" x2="${cx + 6}" y1="${yHigh.toFixed(1)}" y2="${yHigh.toFixed(1)}"/>` +
          `<line x1="${cx - 6}" x2="${cx + 6}" y1="${yLow.toFixed(1)}" y2="${yLow.toFixed(1)}"/>` +
          `</g>`,
      );
    }
    parts.push(
      `<text class="bar-label" x="${x + BAR_WIDTH / 2}" y="${CHART_HEIGHT + 24}"` +
        ` text-anchor="middle">${escapeHtml(truncate(bucket.label, 12))}</text>`,
    );
  });
  return (
    `<svg class="bucket-chart" viewBox="0 0 ${width} ${CHART_HEIGHT + 34}"` +
    ` width="${width}" height="${CHART_HEIGHT + 34}">${parts.join("")}</svg>`
  );
}

function truncate(text: string, n: number): string {
  return text.length <= n ? text : text.slice(0, n - 1) + "…";
}

export function renderSingleView(report: SingleAnalysisReport, state: ViewState): string {
  const metric = state.metric;
  const overall = report.overall.values[metric];
  const interval = report.overall.intervals[metric];
  const intervalText = interval
    ? ` <span class="interval">[${formatValue(interval.low)}, ${formatValue(interval.high)}]</span>`
    : "";
  const charts = Object.entries(report.features)
    .map(
      ([feature, buckets]) => `
      <figure class="feature-block" data-feature="${escapeHtml(feature)}">
        <figcaption>${escapeHtml(feature)}</figcaption>
        ${barChart(feature, buckets, metric)}
      </figure>`,
    )
    .join("");
  return `
    <section class="single-view">
      <header>
        <h2>${escapeHtml(report.system_name)}
          <small>on ${escapeHtml(report.dataset_name)}
            (${report.record_count} records, ${escapeHtml(report.rank_basis)} ranks)</small>
        </h2>
        ${renderMetricSwitcher(report.metrics, metric)}
        <div class="score-card" data-metric="${escapeHtml(metric)}">
          <span class="score">${formatValue(overall)}</span>${intervalText}
        </div>
      </header>
      <div class="charts">${charts}</div>
    </section>`;
}

// ============================================================================
// comparison
// ============================================================================

export function renderComparisonView(report: ComparisonReport): string {
  const systems = report.systems;
  const header = systems
    .map((s) => `<th>${escapeHtml(s)}</th>`)
    .join("");
  const overallRow = systems
    .map(
      (s) =>
        `<td class="num">${formatValue(report.overall_values[s])}` +
        ` <span class="rank">#${report.overall_ranking[s]}</span></td>`,
    )
    .join("");
  const bucketRows = report.buckets
    .map((bucket) => {
      const cells = systems
        .map((s) => {
          const rank = bucket.ranks[s];
          const flip = rank !== report.overall_ranking[s];
          const cls = flip ? "num flip" : "num";
          return (
            `<td class="${cls}"${flip ? ' data-flip="1"' : ""}>` +
            `${formatValue(bucket.values[s])} <span class="rank">#${rank}</span></td>`
          );
        })
        .join("");
      const name = `${bucket.feature} / ${bucket.label}`;
      return `<tr><th scope="row">${escapeHtml(name)}
        <small>n=${bucket.n}</small></th>${cells}</tr>`;
    })
    .join("");
  const accounting = systems
    .map((s) => {
      const acc = report.per_system[s];
      return `<td class="num">${acc.b_eq.toFixed(3)} / ${acc.b_neq.toFixed(3)}</td>`;
    })
    .join("");
  return `
    <section class="compare-view">
      <h2>Comparison by ${escapeHtml(report.metric)}</h2>
      <table class="ranking-table">
        <thead><tr><th>bucket</th>${header}</tr></thead>
        <tbody>
          <tr class="overall"><th scope="row">overall</th>${overallRow}</tr>
          ${bucketRows}
          <tr class="accounting"><th scope="row">b= / b&ne;</th>${accounting}</tr>
        </tbody>
      </table>
      <p class="hint">highlighted cells rank differently than the system's
        overall rank</p>
    </section>`;
}

// ============================================================================
// drill-down
// ============================================================================

export function renderDrillDown(page: ExamplesPage): string {
  const rows = page.records
    .map(
      (rec) => `
      <tr>
        <td class="mono">${escapeHtml(rec.id)}</td>
        <td>${escapeHtml(rec.head)}</td>
        <td>${escapeHtml(rec.relation)}</td>
        <td>${escapeHtml(rec.tail)}</td>
        <td>${escapeHtml(rec.direction)}</td>
        <td class="num">${rec.gold_rank}</td>
      </tr>`,
    )
    .join("");
  const prevDisabled = page.offset === 0 ? " disabled" : "";
  const nextDisabled = page.records.length < page.limit ? " disabled" : "";
  return `
    <aside class="drill-down">
      <header>
        <h3>${escapeHtml(page.feature)} / ${escapeHtml(page.label)}</h3>
        <button data-action="close-drill">close</button>
      </header>
      <table>
        <thead><tr><th>id</th><th>head</th><th>relation</th><th>tail</th>
          <th>direction</th><th>gold rank</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
      <footer>
        <button data-action="drill-page" data-delta="-1"${prevDisabled}>prev</button>
        <span>${page.offset + 1}&ndash;${page.offset + page.records.length}</span>
        <button data-action="drill-page" data-delta="1"${nextDisabled}>next</button>
      </footer>
    </aside>`;
}
