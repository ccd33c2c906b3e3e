from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor

import pytest

from fuzzers import fuzz_foundry_item
from medforge.records import FoundryItem, ReviewState
from medforge.review import (
    CHECKLIST,
    InvalidTransitionError,
    ReviewDecision,
    ReviewError,
    ReviewStore,
    VersionConflictError,
    finalized_cleanly,
    transition,
)


def fresh_item(ident=0):
    rng = random.Random(1000 + ident)
    item = fuzz_foundry_item(rng, ident)
    return FoundryItem(
        id=item.id,
        department=item.department,
        emr=item.emr,
        question=item.question,
        options=item.options,
        answer_index=item.answer_index,
        review=ReviewState.initial(),
        patient=item.patient,
    )


def decision(item, decision="approve", tier=None, version=None, criterion=None, reviewer="rev-a"):
    return ReviewDecision(
        item_id=item.id,
        tier=tier if tier is not None else item.review.tier,
        reviewer_id=reviewer,
        decision=decision,
        expected_version=version if version is not None else item.review.version,
        criterion=criterion,
    )


# -- pure transition machine ------------------------------------------------------


def test_approve_walks_tiers_then_finalizes():
    state = ReviewState.initial()
    item_id = "x"
    for tier in (1, 2):
        d = ReviewDecision(item_id=item_id, tier=tier, reviewer_id="r", decision="approve", expected_version=state.version)
        state = transition(state, d, timestamp=tier)
        assert state.tier == tier + 1
        assert state.status == "pending"
    d = ReviewDecision(item_id=item_id, tier=3, reviewer_id="r", decision="approve", expected_version=state.version)
    state = transition(state, d, timestamp=3)
    assert state.status == "final"
    assert [h["tier"] for h in state.history] == [1, 2, 3]
    assert state.version == 3


@pytest.mark.parametrize("tier", [1, 2, 3])
def test_reject_is_terminal_at_every_tier(tier):
    state = ReviewState.initial()
    for t in range(1, tier):
        d = ReviewDecision(item_id="x", tier=t, reviewer_id="r", decision="approve", expected_version=state.version)
        state = transition(state, d, timestamp=t)
    d = ReviewDecision(
        item_id="x",
        tier=tier,
        reviewer_id="r",
        decision="reject",
        expected_version=state.version,
        criterion="distractor-rationality",
    )
    state = transition(state, d, timestamp=9)
    assert state.status == "rejected"
    assert state.history[-1]["criterion"] == "distractor-rationality"
    # no further decisions are possible
    with pytest.raises(InvalidTransitionError):
        transition(
            state,
            ReviewDecision(item_id="x", tier=tier, reviewer_id="r", decision="approve", expected_version=state.version),
            timestamp=10,
        )


def test_exhaustive_transition_table():
    # From a pending item at each tier, approve/reject at each decision tier:
    # only the matching tier may act; approve advances (or finalizes at 3),
    # reject terminates.
    for item_tier in (1, 2, 3):
        for decision_tier in (1, 2, 3):
            for verb in ("approve", "reject"):
                state = ReviewState(tier=item_tier, status="pending", history=[], version=5)
                d = ReviewDecision(
                    item_id="x",
                    tier=decision_tier,
                    reviewer_id="r",
                    decision=verb,
                    expected_version=5,
                    criterion="diagnostic-error" if verb == "reject" else None,
                )
                if decision_tier != item_tier:
                    with pytest.raises(InvalidTransitionError):
                        transition(state, d, timestamp=0)
                    continue
                out = transition(state, d, timestamp=0)
                if verb == "reject":
                    assert out.status == "rejected"
                    assert out.tier == item_tier
                elif item_tier == 3:
                    assert out.status == "final"
                else:
                    assert out.status == "pending"
                    assert out.tier == item_tier + 1
                assert out.version == 6


def test_version_mismatch_conflicts():
    state = ReviewState.initial()
    d = ReviewDecision(item_id="x", tier=1, reviewer_id="r", decision="approve", expected_version=3)
    with pytest.raises(VersionConflictError):
        transition(state, d, timestamp=0)


def test_reject_requires_criterion():
    with pytest.raises(ReviewError):
        ReviewDecision(item_id="x", tier=1, reviewer_id="r", decision="reject", expected_version=0)


def test_unknown_criterion_rejected():
    with pytest.raises(ReviewError):
        ReviewDecision(
            item_id="x", tier=1, reviewer_id="r", decision="reject", expected_version=0, criterion="not-a-real-one"
        )


def test_checklist_ids_unique_and_categorized():
    ids = [c.id for c in CHECKLIST]
    assert len(ids) == len(set(ids))
    assert {c.category for c in CHECKLIST} == {"consultation", "diagnostic", "question"}


# -- store --------------------------------------------------------------------------


def test_store_apply_review_happy_path():
    item = fresh_item()
    store = ReviewStore([item])
    updated = store.apply_review(decision(item))
    assert updated.review.tier == 2
    assert store.get(item.id).review.version == 1


def test_store_full_approval_chain_is_cleanly_finalized():
    item = fresh_item()
    store = ReviewStore([item])
    for tier in (1, 2, 3):
        current = store.get(item.id)
        store.apply_review(decision(current, tier=tier))
    final = store.get(item.id)
    assert final.review.status == "final"
    assert finalized_cleanly(final)


def test_store_unknown_item():
    store = ReviewStore([])
    with pytest.raises(ReviewError):
        store.apply_review(
            ReviewDecision(item_id="ghost", tier=1, reviewer_id="r", decision="approve", expected_version=0)
        )


def test_store_enforces_reviewer_tier_labels():
    item = fresh_item()
    store = ReviewStore([item], reviewers={"alice": 1, "bob": 2})
    with pytest.raises(InvalidTransitionError):
        store.apply_review(decision(item, reviewer="bob"))  # bob is tier 2
    with pytest.raises(ReviewError):
        store.apply_review(decision(item, reviewer="mallory"))
    updated = store.apply_review(decision(item, reviewer="alice"))
    assert updated.review.tier == 2


def test_fifty_concurrent_conflicting_decisions():
    item = fresh_item()
    store = ReviewStore([item])
    outcomes = []

    def attempt(i):
        try:
            store.apply_review(decision(item, version=0, reviewer=f"rev-{i}"))
            return "ok"
        except VersionConflictError:
            return "conflict"

    with ThreadPoolExecutor(max_workers=50) as pool:
        outcomes = list(pool.map(attempt, range(50)))
    assert outcomes.count("ok") == 1
    assert outcomes.count("conflict") == 49
    assert store.get(item.id).review.version == 1
    assert len(store.get(item.id).review.history) == 1


def test_store_progress_counts():
    items = [fresh_item(i) for i in range(4)]
    store = ReviewStore(items)
    store.apply_review(decision(items[0], decision="reject", criterion="question-relevance"))
    for tier in (1, 2, 3):
        current = store.get(items[1].id)
        store.apply_review(decision(current, tier=tier))
    progress = store.progress()
    assert progress["total"] == 4
    assert progress["by_status"]["rejected"] == 1
    assert progress["by_status"]["final"] == 1
    assert progress["by_status"]["pending"] == 2
    assert progress["pending_by_tier"]["1"] == 2
