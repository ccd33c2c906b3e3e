// Pure HTML renderers. Everything returns a string; nothing touches the
// DOM, so the render layer is unit-testable under node.

import type { AppState } from "./app.js";
import type { ChecklistCriterion, FoundryItem, StatsPayload } from "./types.js";
import { NONE_OF_THE_ABOVE } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderQueue(state: AppState): string {
  const queue = state.queue;
  if (!queue) return `<p class="muted">loading queue…</p>`;
  if (queue.items.length === 0) return `<p class="muted">no items match the current filters</p>`;
  const rows = queue.items
    .map((item) => {
      const selected = state.selected?.item.id === item.id ? " selected" : "";
      return (
        `<tr class="queue-row${selected}" data-item-id="${escapeHtml(item.id)}">` +
        `<td>${escapeHtml(item.id)}</td>` +
        `<td>${escapeHtml(item.department)}</td>` +
        `<td>tier ${item.review.tier}</td>` +
        `<td>${escapeHtml(item.review.status)}</td>` +
        `<td>v${item.review.version}</td></tr>`
      );
    })
    .join("");
  const pages = Math.max(1, Math.ceil(queue.total / queue.page_size));
  return (
    `<table class="queue"><thead><tr><th>id</th><th>department</th><th>tier</th><th>status</th><th>ver</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<p class="muted">page ${queue.page} / ${pages} · ${queue.total} items</p>`
  );
}

/**
 * Option list for one item. The benchmark contract is exactly 21 options
 * with "None of the above" at index 20; rendering anything else would hide
 * a data corruption, so this throws instead.
 */
export function renderOptions(item: FoundryItem): string {
  if (item.options.length !== 21) {
    throw new Error(`item ${item.id}: expected 21 options, got ${item.options.length}`);
  }
  if (item.options[20] !== NONE_OF_THE_ABOVE) {
    throw new Error(`item ${item.id}: option 21 must be "${NONE_OF_THE_ABOVE}"`);
  }
  return item.options
    .map((text, i) => {
      const keyed = i === item.answer_index ? ` keyed" title="keyed answer` : "";
      return `<li class="option${keyed}">${escapeHtml(text)}</li>`;
    })
    .join("");
}

export function renderEmr(item: FoundryItem): string {
  const emr = item.emr;
  const rows: [string, string][] = [
    ["Chief complaint", emr.chief_complaint],
    ["Present illness", emr.present_illness],
    ["Past history", emr.past_history],
    ["Allergy history", emr.allergy_history],
    ["Exams", emr.exams.join("; ")],
    ["Diagnosis", emr.diagnosis],
  ];
  return rows
    .map(([label, value]) => `<dt>${label}</dt><dd>${escapeHtml(value)}</dd>`)
    .join("");
}

export function renderItemDetail(state: AppState): string {
  const detail = state.selected;
  if (!detail) return `<p class="muted">select an item from the queue</p>`;
  const item = detail.item;
  const history = item.review.history
    .map(
      (h) =>
        `<li>tier ${h.tier}: <b>${h.decision}</b> by ${escapeHtml(h.reviewer_id)}` +
        (h.criterion ? ` (${escapeHtml(h.criterion)})` : "") +
        (h.note ? ` — ${escapeHtml(h.note)}` : "") +
        `</li>`
    )
    .join("");
  return (
    `<h2>${escapeHtml(item.id)} <small>${escapeHtml(item.department)} · tier ${item.review.tier} · ` +
    `${escapeHtml(item.review.status)} · v${item.review.version}</small></h2>` +
    `<dl class="emr">${renderEmr(item)}</dl>` +
    `<p class="question">${escapeHtml(item.question)}</p>` +
    `<ol class="options">${renderOptions(item)}</ol>` +
    (history ? `<h3>history</h3><ul class="history">${history}</ul>` : "")
  );
}

export function renderChecklist(criteria: ChecklistCriterion[], selectedId: string): string {
  const groups = new Map<string, ChecklistCriterion[]>();
  for (const criterion of criteria) {
    const bucket = groups.get(criterion.category) ?? [];
    bucket.push(criterion);
    groups.set(criterion.category, bucket);
  }
  let html = `<option value="">— choose a criterion —</option>`;
  for (const [category, entries] of groups) {
    const options = entries
      .map((c) => {
        const selected = c.id === selectedId ? " selected" : "";
        return `<option value="${escapeHtml(c.id)}"${selected}>${escapeHtml(c.id)}: ${escapeHtml(c.text)}</option>`;
      })
      .join("");
    html += `<optgroup label="${escapeHtml(category)}">${options}</optgroup>`;
  }
  return html;
}

export function renderBanner(state: AppState): string {
  if (state.banner) {
    const retry = state.banner.retriable ? ` <button data-action="retry">retry</button>` : "";
    return `<div class="banner ${state.banner.kind}">${escapeHtml(state.banner.text)}${retry}</div>`;
  }
  if (state.fieldError) {
    return `<div class="field-error">${escapeHtml(state.fieldError)}</div>`;
  }
  return "";
}

export function renderStats(stats: StatsPayload | null): string {
  if (!stats) return "";
  const review = stats.review;
  const tiers = Object.entries(review.pending_by_tier)
    .map(([tier, count]) => `tier ${tier}: ${count}`)
    .join(" · ");
  const statuses = Object.entries(review.by_status)
    .map(([status, count]) => `${status}: ${count}`)
    .join(" · ");
  return `<p class="stats">${review.total} items · ${statuses} · pending by ${tiers}</p>`;
}
