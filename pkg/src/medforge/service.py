"""REST API over the review store, consumed by the review UI.

Endpoints (all JSON; errors are {code, message}):
    GET  /api/items?tier=&status=&page=&page_size=   paged item list
    GET  /api/items/{id}                             full item + checklist
    POST /api/items/{id}/review                      apply a ReviewDecision
    GET  /api/checklist                              review criteria
    GET  /api/stats                                  demographics + progress
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .foundry import compute_stats
from .records import RecordError
from .review import (
    CHECKLIST,
    InvalidTransitionError,
    ReviewDecision,
    ReviewError,
    ReviewStore,
    VersionConflictError,
)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(store: ReviewStore) -> FastAPI:
    app = FastAPI(title="medforge review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:
        return _error(500, "internal_error", str(exc))

    @app.get("/api/items")
    def list_items(tier: int | None = None, status: str | None = None, page: int = 1, page_size: int = 20):
        if page < 1 or page_size < 1:
            return _error(400, "bad_request", "page and page_size must be >= 1")
        items = store.list_items(tier=tier, status=status)
        start = (page - 1) * page_size
        window = items[start : start + page_size]
        return {
            "items": [item.to_dict() for item in window],
            "page": page,
            "page_size": page_size,
            "total": len(items),
        }

    @app.get("/api/items/{item_id}")
    def get_item(item_id: str):
        try:
            item = store.get(item_id)
        except ReviewError as exc:
            return _error(404, "not_found", str(exc))
        return {"item": item.to_dict(), "checklist": [c.to_dict() for c in CHECKLIST]}

    @app.post("/api/items/{item_id}/review")
    async def post_review(item_id: str, request: Request):
        try:
            payload = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        if not isinstance(payload, dict):
            return _error(400, "bad_request", "body must be a JSON object")
        payload = dict(payload)
        payload.setdefault("item_id", item_id)
        if payload["item_id"] != item_id:
            return _error(400, "bad_request", "body item_id does not match the URL")
        try:
            decision = ReviewDecision.from_dict(payload)
        except ReviewError as exc:
            return _error(400, "bad_request", str(exc))
        try:
            updated = store.apply_review(decision)
        except VersionConflictError as exc:
            return _error(409, "version_conflict", str(exc))
        except InvalidTransitionError as exc:
            return _error(409, "invalid_transition", str(exc))
        except ReviewError as exc:
            return _error(404, "not_found", str(exc))
        except RecordError as exc:
            return _error(400, "bad_request", str(exc))
        return {"item": updated.to_dict()}

    @app.get("/api/checklist")
    def get_checklist():
        return [c.to_dict() for c in CHECKLIST]

    @app.get("/api/stats")
    def get_stats():
        items = store.list_items()
        return {"demographics": compute_stats(items), "review": store.progress()}

    return app
