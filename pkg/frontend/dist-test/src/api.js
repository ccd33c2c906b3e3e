// Thin typed client over the review REST API. Every non-2xx response is
// surfaced as ApiRequestError carrying the server's {code, message} body,
// so callers can branch on version conflicts without string matching.
export class ApiRequestError extends Error {
    status;
    code;
    constructor(status, body) {
        super(body.message || `HTTP ${status}`);
        this.status = status;
        this.code = body.code || "unknown";
    }
    get isVersionConflict() {
        return this.status === 409;
    }
}
async function parseError(resp) {
    let body = { code: "unknown", message: `HTTP ${resp.status}` };
    try {
        body = (await resp.json());
    }
    catch {
        // non-JSON error body; keep the fallback
    }
    return new ApiRequestError(resp.status, body);
}
export class ReviewApi {
    baseUrl;
    constructor(baseUrl) {
        this.baseUrl = baseUrl;
    }
    async get(path) {
        const resp = await fetch(`${this.baseUrl}${path}`);
        if (!resp.ok)
            throw await parseError(resp);
        return (await resp.json());
    }
    listItems(opts = {}) {
        const params = new URLSearchParams();
        if (opts.tier !== undefined)
            params.set("tier", String(opts.tier));
        if (opts.status)
            params.set("status", opts.status);
        params.set("page", String(opts.page ?? 1));
        params.set("page_size", String(opts.pageSize ?? 20));
        return this.get(`/api/items?${params.toString()}`);
    }
    getItem(id) {
        return this.get(`/api/items/${encodeURIComponent(id)}`);
    }
    getChecklist() {
        return this.get("/api/checklist");
    }
    getStats() {
        return this.get("/api/stats");
    }
    async submitReview(itemId, body) {
        const resp = await fetch(`${this.baseUrl}/api/items/${encodeURIComponent(itemId)}/review`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!resp.ok)
            throw await parseError(resp);
        const payload = (await resp.json());
        return payload.item;
    }
}
