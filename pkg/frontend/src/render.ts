// HTML/SVG fragment builders. Pure string producers so the view layer is
// unit-testable; main.ts assigns the results into the page.

import type { Metric, MetricsBody } from "./api.js";
import type { TopologyLayout } from "./layout.js";
import type { LogEntry, MetricSample } from "./viewmodel.js";
import { ScriptParseError } from "./api.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTopologySvg(layout: TopologyLayout): string {
  const parts: string[] = [];
  parts.push(
    `<svg viewBox="0 0 ${layout.width} ${layout.height}" width="${layout.width}" height="${layout.height}" xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(
    `<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="3" orient="auto">` +
      `<path d="M0,0 L7,3 L0,6 z" fill="#58a6ff"/></marker></defs>`,
  );
  for (const frame of layout.containers) {
    parts.push(
      `<rect class="container" x="${frame.x}" y="${frame.y}" width="${frame.width}" height="${frame.height}" rx="8"/>`,
    );
    parts.push(
      `<text class="container-label" x="${frame.x + 10}" y="${frame.y + 16}">container ${frame.id}</text>`,
    );
  }
  for (const edge of layout.edges) {
    parts.push(
      `<line class="edge" x1="${edge.x1}" y1="${edge.y1}" x2="${edge.x2}" y2="${edge.y2}" marker-end="url(#arrow)"/>`,
    );
    const mx = (edge.x1 + edge.x2) / 2;
    const my = (edge.y1 + edge.y2) / 2 - 6;
    parts.push(`<text class="edge-label" x="${mx}" y="${my}" text-anchor="middle">${esc(edge.label)}</text>`);
  }
  for (const box of layout.boxes) {
    parts.push(
      `<rect class="component" data-component="${box.id}" x="${box.x}" y="${box.y}" width="${box.width}" height="${box.height}" rx="6"/>`,
    );
    parts.push(
      `<text class="component-label" x="${box.x + box.width / 2}" y="${box.y + box.height / 2 + 4}" text-anchor="middle">${esc(box.impl)}</text>`,
    );
    parts.push(
      `<text class="component-id" x="${box.x + box.width / 2}" y="${box.y + box.height - 6}" text-anchor="middle">#${box.id}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

function metricName(metric: Metric): string {
  switch (metric.kind) {
    case "count_method":
      return `${metric.impl}.${metric.operation} calls`;
    case "count_component":
      return `${metric.impl} calls (all operations)`;
    case "temporal":
      return `${metric.impl}.${metric.operation} duration`;
    case "debug_trace":
      return `debug trace → ${metric.logfile}`;
  }
}

function sparkline(series: MetricSample[]): string {
  if (series.length < 2) {
    return "";
  }
  const counts = series.map((s) => s.count);
  const max = Math.max(...counts, 1);
  const pts = counts
    .slice(-40)
    .map((c, i, all) => `${(i / Math.max(all.length - 1, 1)) * 60},${18 - (c / max) * 16}`)
    .join(" ");
  return `<svg class="spark" viewBox="0 0 60 20" width="60" height="20"><polyline points="${pts}" fill="none"/></svg>`;
}

export function renderMetricsPanel(
  body: MetricsBody | null,
  history: Map<number, MetricSample[]>,
): string {
  if (body === null || !body.installed) {
    return `<p class="empty">no metrics: monitoring is not installed on this node</p>`;
  }
  if (body.metrics.length === 0) {
    return `<p class="empty">monitoring installed; no metrics registered yet</p>`;
  }
  const rows = body.metrics.map((m) => {
    const cells = [
      `<td class="metric-name">${esc(metricName(m))}</td>`,
      `<td class="metric-count" data-metric="${m.id}">${m.count}</td>`,
    ];
    if (m.kind === "temporal" && m.mean_us != null) {
      cells.push(
        `<td class="metric-temporal">min ${fmtUs(m.min_us)} / mean ${fmtUs(m.mean_us)} / max ${fmtUs(m.max_us)}</td>`,
      );
    } else {
      cells.push(`<td>${sparkline(history.get(m.id) ?? [])}</td>`);
    }
    return `<tr>${cells.join("")}</tr>`;
  });
  return `<table class="metrics"><thead><tr><th>metric</th><th>count</th><th></th></tr></thead><tbody>${rows.join("")}</tbody></table>`;
}

function fmtUs(us: number | null | undefined): string {
  if (us == null) {
    return "-";
  }
  return us >= 1000 ? `${(us / 1000).toFixed(1)}ms` : `${Math.round(us)}µs`;
}

export function renderSubmissionLog(entries: LogEntry[], parseError: ScriptParseError | null): string {
  if (parseError !== null) {
    return `<p class="parse-error">parse error at line ${parseError.line}, column ${parseError.column}: ${esc(parseError.message)}</p>`;
  }
  if (entries.length === 0) {
    return `<p class="empty">nothing submitted yet</p>`;
  }
  const rows = entries.map(
    (e) =>
      `<li class="${e.ok ? "ok" : "err"}"><span class="idx">[${e.index}]</span> ` +
      `<span class="status">${e.ok ? "ok" : "error"}</span> <code>${esc(e.text)}</code></li>`,
  );
  return `<ol class="log">${rows.join("")}</ol>`;
}

export function renderBanner(connected: boolean, baseUrl: string): string {
  if (connected) {
    return `<span class="dot live"></span> connected to ${esc(baseUrl)}`;
  }
  return `<span class="dot dead"></span> gateway unreachable — retrying…`;
}

export function renderSymbols(symbols: string[]): string {
  return symbols.map((s) => `<code class="sym">${esc(s)}</code>`).join(" ");
}
