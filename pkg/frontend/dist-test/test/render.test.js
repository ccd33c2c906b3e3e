import assert from "node:assert/strict";
import { test } from "node:test";
import { ReviewApi } from "../src/api.js";
import { ReviewApp, emptyForm, validateDecision } from "../src/app.js";
import { renderBanner, renderChecklist, renderItemDetail, renderOptions, renderQueue } from "../src/render.js";
import { NONE_OF_THE_ABOVE } from "../src/types.js";
function fixtureItem(overrides = {}) {
    const options = Array.from({ length: 20 }, (_, i) => `diagnosis ${i}`);
    options.push(NONE_OF_THE_ABOVE);
    return {
        id: "item-001",
        department: "cardiology",
        emr: {
            chief_complaint: "chest pain for two days",
            present_illness: "worse on exertion",
            past_history: "unremarkable",
            allergy_history: "none",
            exams: ["ecg", "troponin"],
            diagnosis: "diagnosis 0",
        },
        question: "What is the most likely diagnosis?",
        options,
        answer_index: 0,
        review: { tier: 1, status: "pending", history: [], version: 0 },
        ...overrides,
    };
}
test("renderOptions shows exactly 21 options with NOTA last", () => {
    const html = renderOptions(fixtureItem());
    const count = (html.match(/<li class="option/g) ?? []).length;
    assert.equal(count, 21);
    assert.ok(html.trimEnd().endsWith(`${NONE_OF_THE_ABOVE}</li>`));
    assert.match(html, /keyed/);
});
test("renderOptions refuses corrupted option lists", () => {
    const short = fixtureItem({ options: ["a", "b", NONE_OF_THE_ABOVE] });
    assert.throws(() => renderOptions(short), /expected 21 options/);
    const wrongLast = fixtureItem();
    wrongLast.options = [...wrongLast.options.slice(0, 20), "Something else"];
    assert.throws(() => renderOptions(wrongLast), /option 21/);
});
test("renderItemDetail escapes html in model text", () => {
    const item = fixtureItem({ question: `<script>alert("x")</script>` });
    const app = new ReviewApp(new ReviewApi("http://unused"));
    app.state.selected = { item, checklist: [] };
    const html = renderItemDetail(app.state);
    assert.ok(!html.includes("<script>alert"));
    assert.ok(html.includes("&lt;script&gt;"));
});
test("renderQueue lists rows with ids and versions", () => {
    const app = new ReviewApp(new ReviewApi("http://unused"));
    app.state.queue = { items: [fixtureItem()], page: 1, page_size: 20, total: 1 };
    const html = renderQueue(app.state);
    assert.match(html, /data-item-id="item-001"/);
    assert.match(html, /v0/);
});
test("renderChecklist mirrors the API payload exactly", () => {
    const criteria = [
        { id: "diagnostic-error", category: "diagnostic", text: "No outright errors." },
        { id: "question-relevance", category: "question", text: "Relevant to the dialogue." },
    ];
    const html = renderChecklist(criteria, "question-relevance");
    for (const c of criteria) {
        assert.ok(html.includes(`value="${c.id}"`), `missing ${c.id}`);
        assert.ok(html.includes(c.text), `missing text for ${c.id}`);
    }
    assert.match(html, /value="question-relevance" selected/);
    // nothing but the payload criteria (plus the empty placeholder)
    const optionCount = (html.match(/<option value="[^"]/g) ?? []).length;
    assert.equal(optionCount, criteria.length);
});
test("validateDecision blocks reject without criterion", () => {
    const form = { ...emptyForm(), decision: "reject" };
    assert.match(validateDecision(form, "dr-attending") ?? "", /criterion/);
    assert.equal(validateDecision({ ...form, criterion: "diagnostic-error" }, "dr-attending"), null);
    assert.match(validateDecision(emptyForm(), "") ?? "", /profile/);
});
test("submit with invalid form sends no request", async () => {
    let requests = 0;
    const api = new ReviewApi("http://unused");
    api.submitReview = async () => {
        requests += 1;
        throw new Error("should not be called");
    };
    const app = new ReviewApp(api);
    app.state.selected = { item: fixtureItem(), checklist: [] };
    app.setForm({ decision: "reject", criterion: "" });
    const result = await app.submit();
    assert.equal(result, null);
    assert.equal(requests, 0);
    assert.match(app.state.fieldError ?? "", /criterion/);
});
test("banner renders conflict and field errors", () => {
    const app = new ReviewApp(new ReviewApi("http://unused"));
    app.state.banner = { kind: "conflict", text: "stale version", retriable: false };
    assert.match(renderBanner(app.state), /banner conflict/);
    app.state.banner = null;
    app.state.fieldError = "bad form";
    assert.match(renderBanner(app.state), /field-error/);
});
