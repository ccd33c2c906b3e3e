// Scripted walkthrough against the real review service: a tier-1→3
// approval chain, a tier-2 rejection with criterion, and a forced 409
// survived without losing the note text.

import assert from "node:assert/strict";
import { after, before, test } from "node:test";

import { ReviewApi } from "../src/api.js";
import { ReviewApp } from "../src/app.js";
import { renderChecklist } from "../src/render.js";
import { startServer, type LiveServer } from "./helpers.js";

let server: LiveServer;
let api: ReviewApi;

before(async () => {
  server = await startServer(8977);
  api = new ReviewApi(server.baseUrl);
});

after(() => server.stop());

function appForTier(tier: number): ReviewApp {
  const app = new ReviewApp(api);
  app.setProfile(["dr-attending", "dr-associate", "dr-chief"][tier - 1]!);
  return app;
}

test("seeded queue serves 10 pending tier-1 items", async () => {
  const app = appForTier(1);
  const queue = await app.loadQueue();
  assert.equal(queue.total, 10);
  assert.ok(queue.items.every((i) => i.review.tier === 1 && i.review.status === "pending"));
});

test("one item approved through all three tiers ends final on the server", async () => {
  const itemId = "dlg-0000";
  for (const tier of [1, 2, 3]) {
    const app = appForTier(tier);
    await app.loadQueue();
    await app.select(itemId);
    app.setForm({ decision: "approve", note: `tier ${tier} ok` });
    const updated = await app.submit();
    assert.ok(updated, `tier ${tier} submit failed: ${app.state.banner?.text ?? app.state.fieldError}`);
    // the tier-1 pending queue no longer contains the item; the next tier's does
    const pendingNow = await api.listItems({ tier, status: "pending" });
    assert.ok(!pendingNow.items.some((i) => i.id === itemId));
    if (tier < 3) {
      const nextQueue = await api.listItems({ tier: tier + 1, status: "pending" });
      assert.ok(nextQueue.items.some((i) => i.id === itemId));
    }
  }
  const fresh = await api.getItem(itemId);
  assert.equal(fresh.item.review.status, "final");
  assert.deepEqual(
    fresh.item.review.history.map((h) => [h.tier, h.decision]),
    [
      [1, "approve"],
      [2, "approve"],
      [3, "approve"],
    ]
  );
});

test("reject at tier 2 records the criterion", async () => {
  const itemId = "dlg-0001";
  const tier1 = appForTier(1);
  await tier1.select(itemId);
  tier1.setForm({ decision: "approve" });
  assert.ok(await tier1.submit());

  const tier2 = appForTier(2);
  await tier2.select(itemId);
  tier2.setForm({ decision: "reject", criterion: "distractor-rationality", note: "overlapping options" });
  const updated = await tier2.submit();
  assert.ok(updated);
  assert.equal(updated.review.status, "rejected");
  const last = updated.review.history.at(-1)!;
  assert.equal(last.criterion, "distractor-rationality");
  assert.equal(last.note, "overlapping options");
  // UI state equals a fresh GET after the acknowledged decision
  const fresh = await api.getItem(itemId);
  assert.deepEqual(tier2.state.selected?.item, fresh.item);
});

test("a forced 409 surfaces a conflict, refreshes the item, and keeps the note", async () => {
  const itemId = "dlg-0002";
  const app = appForTier(1);
  await app.select(itemId);
  app.setForm({ decision: "approve", note: "my careful long note" });

  // someone else approves first -> our expected_version goes stale
  await api.submitReview(itemId, {
    tier: 1,
    reviewer_id: "dr-attending",
    decision: "approve",
    expected_version: app.state.selected!.item.review.version,
  });

  const result = await app.submit();
  assert.equal(result, null);
  assert.equal(app.state.banner?.kind, "conflict");
  assert.equal(app.state.form.note, "my careful long note");
  // the selected item was refreshed to the server's post-conflict state
  const fresh = await api.getItem(itemId);
  assert.deepEqual(app.state.selected?.item, fresh.item);
  assert.equal(app.state.selected?.item.review.tier, 2);

  // the decision can be retried cleanly at the new tier by the right reviewer
  const tier2 = appForTier(2);
  await tier2.select(itemId);
  tier2.setForm({ decision: "approve", note: "retry after conflict" });
  assert.ok(await tier2.submit());
});

test("checklist rendered by the UI equals the API payload", async () => {
  const payload = await api.getChecklist();
  const app = appForTier(1);
  await app.loadQueue();
  await app.select("dlg-0003");
  assert.deepEqual(app.checklist, payload);
  const html = renderChecklist(app.checklist, "");
  for (const criterion of payload) {
    assert.ok(html.includes(`value="${criterion.id}"`));
  }
  const rendered = (html.match(/<option value="[^"]/g) ?? []).length;
  assert.equal(rendered, payload.length);
});

test("stats endpoint feeds the progress panel", async () => {
  const app = appForTier(1);
  const stats = await app.loadStats();
  assert.equal(stats.review.total, 10);
  assert.ok(stats.review.by_status["final"]! >= 1);
  assert.ok(stats.review.by_status["rejected"]! >= 1);
});
