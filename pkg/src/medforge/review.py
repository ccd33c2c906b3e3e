"""Three-tier review workflow over foundry items.

Items start pending at tier 1. Approval climbs one tier at a time; the
tier-3 approval finalizes the item; any rejection is terminal and must cite
a checklist criterion. Mutations are optimistic: every decision carries the
version it was based on, and the store rejects stale writes so concurrent
reviewers cannot clobber each other.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from .records import FoundryItem, ReviewState

TIERS = (1, 2, 3)


@dataclass(frozen=True)
class ChecklistCriterion:
    id: str
    category: str  # consultation | diagnostic | question
    text: str

    def to_dict(self) -> dict:
        return {"id": self.id, "category": self.category, "text": self.text}


CHECKLIST: tuple[ChecklistCriterion, ...] = (
    ChecklistCriterion(
        "consultation-completeness",
        "consultation",
        "History taking covers the complaint, current illness, and past history well enough to support the conclusion.",
    ),
    ChecklistCriterion(
        "consultation-allergy-inquiry",
        "consultation",
        "Allergy history and special past conditions were checked before any treatment recommendation.",
    ),
    ChecklistCriterion(
        "consultation-safety-info",
        "consultation",
        "Safety-relevant information (allergies, liver/kidney function, special disease history) was collected where medication advice could cause harm.",
    ),
    ChecklistCriterion(
        "diagnostic-error",
        "diagnostic",
        "The keyed diagnosis is free of outright diagnostic errors.",
    ),
    ChecklistCriterion(
        "diagnostic-primary-missed",
        "diagnostic",
        "The primary disease is diagnosed, not only a secondary condition.",
    ),
    ChecklistCriterion(
        "diagnostic-specificity",
        "diagnostic",
        "The diagnosis is as specific as the available description allows (subtype rather than a broad category).",
    ),
    ChecklistCriterion(
        "diagnostic-evidence",
        "diagnostic",
        "The diagnostic basis in the record is sufficient to support the keyed answer.",
    ),
    ChecklistCriterion(
        "question-relevance",
        "question",
        "The question content is highly relevant to the source consultation.",
    ),
    ChecklistCriterion(
        "distractor-rationality",
        "question",
        "Distractor options are rational and carry no hierarchical overlap with the keyed option that would make the answer ambiguous.",
    ),
    ChecklistCriterion(
        "question-sufficiency",
        "question",
        "The information in the question is sufficient to reach the keyed diagnosis.",
    ),
)

CRITERION_IDS = frozenset(c.id for c in CHECKLIST)


class ReviewError(ValueError):
    """Invalid decision payload (bad tier, missing criterion, unknown item)."""


class VersionConflictError(ReviewError):
    """expected_version did not match the stored item version."""


class InvalidTransitionError(ReviewError):
    """Decision tier does not match the item's current pending tier/status."""


@dataclass(frozen=True)
class ReviewDecision:
    item_id: str
    tier: int
    reviewer_id: str
    decision: str  # approve | reject
    expected_version: int
    criterion: str | None = None
    note: str = ""

    def __post_init__(self) -> None:
        if self.tier not in TIERS:
            raise ReviewError(f"tier must be one of {TIERS}, got {self.tier!r}")
        if self.decision not in ("approve", "reject"):
            raise ReviewError(f"decision must be approve or reject, got {self.decision!r}")
        if not self.item_id:
            raise ReviewError("item_id is required")
        if not self.reviewer_id:
            raise ReviewError("reviewer_id is required")
        if self.decision == "reject" and not self.criterion:
            raise ReviewError("reject requires a checklist criterion")
        if self.criterion is not None and self.criterion not in CRITERION_IDS:
            raise ReviewError(f"unknown criterion {self.criterion!r}")
        if not isinstance(self.expected_version, int) or self.expected_version < 0:
            raise ReviewError("expected_version must be a non-negative integer")

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewDecision":
        if not isinstance(d.get("tier"), int) or isinstance(d.get("tier"), bool):
            raise ReviewError("tier must be an integer")
        if not isinstance(d.get("expected_version"), int) or isinstance(d.get("expected_version"), bool):
            raise ReviewError("expected_version must be an integer")
        return cls(
            item_id=d.get("item_id", ""),
            tier=d["tier"],
            reviewer_id=d.get("reviewer_id", ""),
            decision=d.get("decision", ""),
            expected_version=d["expected_version"],
            criterion=d.get("criterion") or None,
            note=d.get("note", ""),
        )

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "tier": self.tier,
            "reviewer_id": self.reviewer_id,
            "decision": self.decision,
            "expected_version": self.expected_version,
            "criterion": self.criterion,
            "note": self.note,
        }


def transition(state: ReviewState, decision: ReviewDecision, timestamp: int) -> ReviewState:
    """Pure state-machine step; raises on conflicts instead of guessing."""
    if decision.expected_version != state.version:
        raise VersionConflictError(
            f"expected version {decision.expected_version}, item is at {state.version}"
        )
    if state.status != "pending":
        raise InvalidTransitionError(f"item is {state.status}, not pending")
    if decision.tier != state.tier:
        raise InvalidTransitionError(f"item is at tier {state.tier}, decision targets tier {decision.tier}")
    entry = {
        "tier": decision.tier,
        "reviewer_id": decision.reviewer_id,
        "decision": decision.decision,
        "criterion": decision.criterion,
        "note": decision.note,
        "timestamp": timestamp,
    }
    history = list(state.history) + [entry]
    if decision.decision == "reject":
        return ReviewState(tier=state.tier, status="rejected", history=history, version=state.version + 1)
    if state.tier == 3:
        return ReviewState(tier=3, status="final", history=history, version=state.version + 1)
    return ReviewState(tier=state.tier + 1, status="pending", history=history, version=state.version + 1)


class ReviewStore:
    """In-memory item store with per-store serialized mutations.

    reviewers, when provided, maps reviewer_id -> tier and is enforced so a
    reviewer can only decide at their own tier.
    """

    def __init__(self, items: list[FoundryItem] | None = None, reviewers: dict[str, int] | None = None, clock: Callable[[], int] | None = None):
        self._items: dict[str, FoundryItem] = {}
        self._lock = threading.Lock()
        self.reviewers = dict(reviewers or {})
        self._clock = clock or (lambda: int(time.time() * 1000))
        for item in items or []:
            self.add(item)

    def add(self, item: FoundryItem) -> None:
        with self._lock:
            self._items[item.id] = item

    def get(self, item_id: str) -> FoundryItem:
        with self._lock:
            if item_id not in self._items:
                raise ReviewError(f"unknown item {item_id!r}")
            return self._items[item_id]

    def list_items(self, tier: int | None = None, status: str | None = None) -> list[FoundryItem]:
        with self._lock:
            items = sorted(self._items.values(), key=lambda i: i.id)
        if tier is not None:
            items = [i for i in items if i.review.tier == tier]
        if status is not None:
            items = [i for i in items if i.review.status == status]
        return items

    def apply_review(self, decision: ReviewDecision) -> FoundryItem:
        """Check-and-set under the store lock: exactly one of any set of
        same-version concurrent decisions can win."""
        if self.reviewers and decision.reviewer_id in self.reviewers:
            if self.reviewers[decision.reviewer_id] != decision.tier:
                raise InvalidTransitionError(
                    f"reviewer {decision.reviewer_id!r} holds tier {self.reviewers[decision.reviewer_id]}, "
                    f"cannot decide at tier {decision.tier}"
                )
        elif self.reviewers:
            raise ReviewError(f"unknown reviewer {decision.reviewer_id!r}")
        with self._lock:
            if decision.item_id not in self._items:
                raise ReviewError(f"unknown item {decision.item_id!r}")
            item = self._items[decision.item_id]
            new_state = transition(item.review, decision, self._clock())
            updated = FoundryItem(
                id=item.id,
                department=item.department,
                emr=item.emr,
                question=item.question,
                options=item.options,
                answer_index=item.answer_index,
                review=new_state,
                patient=item.patient,
            )
            self._items[item.id] = updated
            return updated

    def progress(self) -> dict:
        """Live review throughput: counts by status and pending counts by tier."""
        with self._lock:
            items = list(self._items.values())
        by_status = {s: 0 for s in ("pending", "rejected", "final")}
        pending_by_tier = {t: 0 for t in TIERS}
        for item in items:
            by_status[item.review.status] = by_status.get(item.review.status, 0) + 1
            if item.review.status == "pending":
                pending_by_tier[item.review.tier] += 1
        return {
            "total": len(items),
            "by_status": by_status,
            "pending_by_tier": {str(t): c for t, c in pending_by_tier.items()},
        }


def finalized_cleanly(item: FoundryItem) -> bool:
    """True when history shows exactly three approvals at tiers 1, 2, 3 in order."""
    history = item.review.history
    return (
        item.review.status == "final"
        and len(history) == 3
        and [h["tier"] for h in history] == [1, 2, 3]
        and all(h["decision"] == "approve" for h in history)
    )
