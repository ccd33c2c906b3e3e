// DOM bootstrap: the only module that touches the browser. All behavior
// lives in ReviewApp; this file renders state into #app and forwards events.

import { ReviewApi } from "./api.js";
import { ReviewApp } from "./app.js";
import { renderBanner, renderChecklist, renderItemDetail, renderQueue, renderStats } from "./render.js";

declare global {
  interface Window {
    __API_BASE__?: string;
  }
}

const apiBase = window.__API_BASE__ ?? `${location.protocol}//${location.hostname}:8765`;
const app = new ReviewApp(new ReviewApi(apiBase));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

function render(): void {
  const state = app.state;
  const profileOptions = state.profiles
    .map((p) => `<option value="${p.id}"${p.id === state.profileId ? " selected" : ""}>${p.label}</option>`)
    .join("");
  const statusOptions = ["pending", "final", "rejected", ""]
    .map((s) => `<option value="${s}"${s === state.statusFilter ? " selected" : ""}>${s || "any"}</option>`)
    .join("");
  root!.innerHTML = `
    <header>
      <h1>review queue</h1>
      ${renderStats(state.stats)}
      <div class="controls">
        <label>reviewer <select id="profile">${profileOptions}</select></label>
        <label>status <select id="status">${statusOptions}</select></label>
        <button id="reload">reload</button>
      </div>
      ${renderBanner(state)}
    </header>
    <main>
      <section class="queue-pane">${renderQueue(state)}</section>
      <section class="detail-pane">
        ${renderItemDetail(state)}
        ${state.selected ? decisionForm() : ""}
      </section>
    </main>`;
  bind();
}

function decisionForm(): string {
  const form = app.state.form;
  return `
    <form id="decision" class="decision">
      <label><input type="radio" name="verdict" value="approve"${form.decision === "approve" ? " checked" : ""}> approve</label>
      <label><input type="radio" name="verdict" value="reject"${form.decision === "reject" ? " checked" : ""}> reject</label>
      <label>criterion <select id="criterion">${renderChecklist(app.checklist, form.criterion)}</select></label>
      <label>note <textarea id="note" rows="2">${form.note}</textarea></label>
      <button type="submit">submit decision</button>
    </form>`;
}

function bind(): void {
  document.getElementById("profile")?.addEventListener("change", (e) => {
    app.setProfile((e.target as HTMLSelectElement).value);
    void app.loadQueue();
  });
  document.getElementById("status")?.addEventListener("change", (e) => {
    app.setFilters(app.state.tierFilter, (e.target as HTMLSelectElement).value);
    void app.loadQueue();
  });
  document.getElementById("reload")?.addEventListener("click", () => {
    void app.loadQueue();
    void app.loadStats();
  });
  for (const row of Array.from(document.querySelectorAll<HTMLElement>(".queue-row"))) {
    row.addEventListener("click", () => {
      const id = row.dataset["itemId"];
      if (id) void app.select(id);
    });
  }
  const form = document.getElementById("decision");
  form?.addEventListener("submit", (e) => {
    e.preventDefault();
    const verdict = (document.querySelector('input[name="verdict"]:checked') as HTMLInputElement | null)?.value;
    app.setForm({
      decision: verdict === "reject" ? "reject" : "approve",
      criterion: (document.getElementById("criterion") as HTMLSelectElement).value,
      note: (document.getElementById("note") as HTMLTextAreaElement).value,
    });
    void app.submit();
  });
}

app.onChange = render;
render();
void app.loadQueue().then(() => app.loadStats());
