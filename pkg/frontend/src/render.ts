// Pure HTML-string renderers. Everything interactive carries a data-action
// attribute that app.ts wires up; nothing here touches the DOM, which keeps
// the views testable in plain node.

import { stepChartSvg } from "./chart.js";
import { age, escapeAttr, escapeHtml, hoursLabel } from "./format.js";
import type { ViewState } from "./state.js";
import type { PageList, Timeline, TriageItem } from "./types.js";

export const FLAG_OPTIONS = [
  "repeat_defacement",
  "fixed",
  "defaced_fluctuating",
  "defaced_constant",
  "not_found",
] as const;

export const STATUS_OPTIONS = [
  "defaced",
  "suspected_false_positive",
  "clean",
  "unreachable",
] as const;

// Snapshot bodies are hostile. They render exclusively inside a fully
// sandboxed frame: the empty sandbox attribute disables scripts, forms,
// top-level navigation, and same-origin access, and the server pairs it
// with a sandboxing Content-Security-Policy on the response itself.
export const SNAPSHOT_SANDBOX = "";

function flagBadge(flag: string | null): string {
  if (!flag) return '<span class="badge none">unchecked</span>';
  return `<span class="badge ${escapeAttr(flag)}">${escapeHtml(flag.replace(/_/g, " "))}</span>`;
}

function confidenceBadge(item: TriageItem): string {
  if (!item.confidence) return "";
  return `<span class="conf ${escapeAttr(item.confidence)}">${escapeHtml(item.confidence)}</span>`;
}

function select(name: string, options: readonly string[], current: string | null): string {
  const opts = [
    `<option value="">all</option>`,
    ...options.map(
      (value) =>
        `<option value="${escapeAttr(value)}"${value === current ? " selected" : ""}>${escapeHtml(
          value.replace(/_/g, " "),
        )}</option>`,
    ),
  ];
  return `<select data-action="filter" name="${escapeAttr(name)}">${opts.join("")}</select>`;
}

export function renderFilterBar(state: ViewState): string {
  return `
<div class="filters">
  <label>flag ${select("flag", FLAG_OPTIONS, state.flag)}</label>
  <label>status ${select("status", STATUS_OPTIONS, state.status)}</label>
  <label>verdict ${select("verdict", ["confirmed_defaced", "false_positive", "remediated"], state.verdict)}</label>
  <label class="toggle"><input type="checkbox" data-action="active-only" ${state.activeOnly ? "checked" : ""}/> active only</label>
</div>`;
}

export function visibleItems(list: PageList, state: ViewState): TriageItem[] {
  // "active only" hides pages a verdict has stopped; the server keeps
  // them available for history views.
  return state.activeOnly
    ? list.items.filter((item) => item.monitoring === "active")
    : list.items;
}

export function renderQueue(list: PageList, state: ViewState, now: Date = new Date()): string {
  const items = visibleItems(list, state);
  if (items.length === 0) {
    return `${renderFilterBar(state)}<p class="empty">No pages match the current filters.</p>`;
  }
  const rows = items
    .map((item, index) => {
      const selected = item.page_id === state.selected ? " selected" : "";
      const profile = item.latest_profile;
      const hiddenShare = profile
        ? (profile.by_class["hidden_display_none"] ?? 0) + (profile.by_class["off_screen"] ?? 0)
        : 0;
      return `
<tr class="queue-row${selected}" data-action="open" data-page-id="${escapeAttr(item.page_id)}" data-index="${index}" tabindex="0">
  <td class="url" title="${escapeAttr(item.url)}">${escapeHtml(item.url)}</td>
  <td>${flagBadge(item.current_flag)}</td>
  <td>${confidenceBadge(item)}</td>
  <td class="num">${profile ? profile.total : "—"}</td>
  <td class="num" title="hidden or off-screen occurrences">${hiddenShare}</td>
  <td class="age">${age(item.last_observed_at, now)}</td>
  <td>${item.verdict ? escapeHtml(item.verdict.verdict.replace(/_/g, " ")) : ""}</td>
</tr>`;
    })
    .join("");
  return `${renderFilterBar(state)}
<table class="queue">
  <thead><tr><th>page</th><th>flag</th><th>conf</th><th>total</th><th>hidden</th><th>seen</th><th>verdict</th></tr></thead>
  <tbody>${rows}</tbody>
</table>
${renderPager(list)}`;
}

export function renderPager(list: PageList): string {
  if (list.pages <= 1) return "";
  const buttons: string[] = [];
  for (let n = 1; n <= list.pages; n += 1) {
    const current = n === list.page ? " current" : "";
    buttons.push(
      `<button class="page-btn${current}" data-action="goto-page" data-page="${n}">${n}</button>`,
    );
  }
  return `<nav class="pager">page ${list.page} of ${list.pages} ${buttons.join("")}</nav>`;
}

export function renderConnectionBanner(error: string | null, staleSince: string | null): string {
  if (!error) return "";
  const stale = staleSince ? ` Showing data from ${escapeHtml(staleSince)}.` : "";
  return `<div class="banner error">API unreachable: ${escapeHtml(error)}.${stale}</div>`;
}

export interface SnapshotView {
  digest: string | null;
  mode: "render" | "source";
  sourceHtml: string | null;
}

export function renderSnapshotSection(
  timeline: Timeline,
  snapshotUrl: (pageId: string, digest: string) => string,
  view: SnapshotView,
): string {
  if (timeline.snapshots.length === 0) {
    return `<section class="snapshot"><h3>Snapshot</h3><p class="empty">No stored bodies for this page.</p></section>`;
  }
  const digest = view.digest ?? timeline.snapshots[timeline.snapshots.length - 1].content_digest;
  const options = timeline.snapshots
    .map(
      (snap) =>
        `<option value="${escapeAttr(snap.content_digest)}"${snap.content_digest === digest ? " selected" : ""}>${escapeHtml(snap.fetched_at)} (${escapeHtml(snap.content_digest.slice(0, 12))})</option>`,
    )
    .join("");
  const url = snapshotUrl(timeline.page.page_id, digest);
  const body =
    view.mode === "render"
      ? `<iframe class="snapshot-frame" sandbox="${SNAPSHOT_SANDBOX}" referrerpolicy="no-referrer" src="${escapeAttr(url)}" title="sandboxed snapshot render"></iframe>`
      : `<pre class="snapshot-source">${escapeHtml(view.sourceHtml ?? "loading source…")}</pre>`;
  return `
<section class="snapshot">
  <h3>Snapshot</h3>
  <div class="snapshot-controls">
    <select data-action="pick-snapshot">${options}</select>
    <button data-action="snapshot-mode" data-mode="render" ${view.mode === "render" ? "disabled" : ""}>rendered</button>
    <button data-action="snapshot-mode" data-mode="source" ${view.mode === "source" ? "disabled" : ""}>source</button>
  </div>
  ${body}
  <p class="note">Rendered view is fully sandboxed: scripts, forms, and navigation are disabled. Hidden content stays invisible exactly as a visitor would (not) see it; use the source view to inspect it.</p>
</section>`;
}

function keywordBreakdown(timeline: Timeline): string {
  const latest = timeline.series[timeline.series.length - 1];
  if (!latest) return "";
  const rows = Object.entries(latest.per_keyword)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([keyword, classes]) => {
      const visible = classes["visible"] ?? 0;
      const hidden = classes["hidden_display_none"] ?? 0;
      const off = classes["off_screen"] ?? 0;
      return `<tr><td>${escapeHtml(keyword)}</td><td class="num">${visible}</td><td class="num">${hidden}</td><td class="num">${off}</td></tr>`;
    })
    .join("");
  if (!rows) return `<p class="empty">No keyword occurrences in the latest check.</p>`;
  return `
<table class="keywords">
  <thead><tr><th>keyword</th><th>visible</th><th>display:none</th><th>off-screen</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function renderVerdictPanel(item: TriageItem, draftNote: string): string {
  const current = item.verdict
    ? `<p class="current-verdict">latest: <strong>${escapeHtml(item.verdict.verdict)}</strong> by ${escapeHtml(item.verdict.analyst)} at ${escapeHtml(item.verdict.at)}</p>`
    : "";
  return `
<section class="verdict-panel">
  <h3>Verdict</h3>
  ${current}
  <input type="text" data-field="analyst" placeholder="analyst" value=""/>
  <input type="text" data-field="note" placeholder="note (optional)" value="${escapeAttr(draftNote)}"/>
  <div class="verdict-buttons">
    <button data-action="verdict" data-verdict="confirmed_defaced">confirm defaced</button>
    <button data-action="verdict" data-verdict="false_positive">false positive</button>
    <button data-action="verdict" data-verdict="remediated">remediated</button>
  </div>
</section>`;
}

export function renderDetail(
  timeline: Timeline,
  snapshotUrl: (pageId: string, digest: string) => string,
  snapshotView: SnapshotView,
  draftNote = "",
): string {
  const item = timeline.page;
  const cycles = timeline.cycles
    .map(
      (cycle) =>
        `<li>${escapeHtml(cycle.start_at)} → ${escapeHtml(cycle.fixed_at)} (${hoursLabel(cycle.delta_hours)})</li>`,
    )
    .join("");
  return `
<article class="detail" data-page-id="${escapeAttr(item.page_id)}">
  <header>
    <button data-action="back">← queue</button>
    <h2><a href="${escapeAttr(item.url)}" rel="noopener noreferrer nofollow" target="_blank">${escapeHtml(item.url)}</a></h2>
    ${flagBadge(item.current_flag)} ${confidenceBadge(item)}
    <span class="meta">${item.observation_count} checks, last ${age(item.last_observed_at)}</span>
  </header>
  <section class="chart-section">
    <h3>Keyword total over time</h3>
    ${stepChartSvg(timeline.series, timeline.cycles)}
    <p class="deltas">first fix: ${hoursLabel(timeline.delta_first_hours)}, average: ${hoursLabel(timeline.delta_avg_hours)}</p>
    ${cycles ? `<ul class="cycles">${cycles}</ul>` : '<p class="empty">No closed defacement cycle yet.</p>'}
  </section>
  <section class="breakdown"><h3>Latest keyword breakdown</h3>${keywordBreakdown(timeline)}</section>
  ${renderSnapshotSection(timeline, snapshotUrl, snapshotView)}
  ${renderVerdictPanel(item, draftNote)}
</article>`;
}
