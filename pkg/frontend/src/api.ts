// Thin typed client over the review REST API. Every non-2xx response is
// surfaced as ApiRequestError carrying the server's {code, message} body,
// so callers can branch on version conflicts without string matching.

import type {
  ApiError,
  ChecklistCriterion,
  FoundryItem,
  ItemDetail,
  ItemPage,
  StatsPayload,
} from "./types.js";

export class ApiRequestError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiError) {
    super(body.message || `HTTP ${status}`);
    this.status = status;
    this.code = body.code || "unknown";
  }

  get isVersionConflict(): boolean {
    return this.status === 409;
  }
}

export interface DecisionBody {
  tier: number;
  reviewer_id: string;
  decision: "approve" | "reject";
  expected_version: number;
  criterion?: string;
  note?: string;
}

async function parseError(resp: Response): Promise<ApiRequestError> {
  let body: ApiError = { code: "unknown", message: `HTTP ${resp.status}` };
  try {
    body = (await resp.json()) as ApiError;
  } catch {
    // non-JSON error body; keep the fallback
  }
  return new ApiRequestError(resp.status, body);
}

export class ReviewApi {
  constructor(readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  listItems(opts: { tier?: number; status?: string; page?: number; pageSize?: number } = {}): Promise<ItemPage> {
    const params = new URLSearchParams();
    if (opts.tier !== undefined) params.set("tier", String(opts.tier));
    if (opts.status) params.set("status", opts.status);
    params.set("page", String(opts.page ?? 1));
    params.set("page_size", String(opts.pageSize ?? 20));
    return this.get<ItemPage>(`/api/items?${params.toString()}`);
  }

  getItem(id: string): Promise<ItemDetail> {
    return this.get<ItemDetail>(`/api/items/${encodeURIComponent(id)}`);
  }

  getChecklist(): Promise<ChecklistCriterion[]> {
    return this.get<ChecklistCriterion[]>("/api/checklist");
  }

  getStats(): Promise<StatsPayload> {
    return this.get<StatsPayload>("/api/stats");
  }

  async submitReview(itemId: string, body: DecisionBody): Promise<FoundryItem> {
    const resp = await fetch(`${this.baseUrl}/api/items/${encodeURIComponent(itemId)}/review`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await parseError(resp);
    const payload = (await resp.json()) as { item: FoundryItem };
    return payload.item;
  }
}
