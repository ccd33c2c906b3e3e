"""Acceptance suite: one test per acceptance criterion, mock backends only.

Each test prints a single [PASS]/[FAIL] line (run with ``pytest -v -s`` to
see them) and enforces the criterion's stated tolerances exactly.
"""

from __future__ import annotations

import json
import math
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from fuzzers import ALL_FUZZERS
from medforge.cli import run as forge
from medforge.demo import (
    foundry_scripts,
    fuzz_plan,
    icd_vocabulary,
    loop_scripts,
    make_dialogues,
    make_seeds,
    narration_reply,
    pipeline_scripts,
    stats_fixture_items,
)
from medforge.dual_expert import DualExpertEngine, LoopConfig, call_budget
from medforge.evaluation import EvalResult, evaluate, render_report
from medforge.foundry import (
    DEFAULT_DEID_RULES,
    build_items,
    compute_stats,
    dedup_complaints,
    deidentify_dialogue,
    jaccard,
    rule_match_count,
)
from medforge.gateway import BackendConfig, Gateway
from medforge.mixer import init_mixer, sample_ratios, schedule, update
from medforge.preference import SampledResponse, build_pair
from medforge.question_pipeline import narrate_first_person
from medforge.records import (
    NONE_OF_THE_ABOVE,
    EvalItem,
    FoundryItem,
    QuestionSeed,
    ReviewState,
    RewardEvent,
    SftRecord,
    parse_sft_target,
    read_records,
    serialize_sft_target,
    write_records,
)
from medforge.review import ReviewDecision, ReviewStore, VersionConflictError, finalized_cleanly, transition
from test_preference import oracle_build_pair

SFT_TARGET_RE = re.compile(r"\A<think>.*</think><answer>.*</answer>\Z", re.DOTALL)


def _report(name: str, passed: bool, detail: str = "") -> None:
    marker = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{marker}] {name}{suffix}")
    assert passed, f"{name}{suffix}"


# -----------------------------------------------------------------------------
# End-to-end synthesis: 25 seeds -> >=20 SftRecords, grammar-exact targets,
# two byte-identical runs, under 60 s.
# -----------------------------------------------------------------------------


def _run_chain(base: Path, seeds_path: Path, scripts) -> tuple[bytes, bytes, bytes, list[SftRecord]]:
    base.mkdir(parents=True, exist_ok=True)
    config = {
        "backends": [
            {"id": "rw", "kind": "mock", "script": scripts.rewriter},
            {"id": "reason", "kind": "mock", "script": scripts.reasoning},
            {"id": "reflect", "kind": "mock", "script": scripts.reflection},
            {"id": "narrator", "kind": "mock", "script": scripts.narrator},
        ],
        "templates_dir": "",
        "defaults": {},
        "service": {},
    }
    config_path = base / "forge.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    opens, traces, sft = base / "open.jsonl", base / "traces.jsonl", base / "sft.jsonl"
    assert forge(["--config", str(config_path), "rewrite", "--seeds", str(seeds_path), "--out", str(opens), "--backend", "rw"]) == 0
    assert forge([
        "--config", str(config_path), "synth", "--seeds", str(seeds_path), "--open", str(opens),
        "--out", str(traces), "--reasoning-backend", "reason", "--reflection-backend", "reflect",
    ]) == 0
    assert forge([
        "--config", str(config_path), "narrate", "--traces", str(traces), "--seeds", str(seeds_path),
        "--open", str(opens), "--out", str(sft), "--backend", "narrator",
    ]) == 0
    return opens.read_bytes(), traces.read_bytes(), sft.read_bytes(), list(read_records(sft, SftRecord))


def test_acceptance_end_to_end_synthesis(tmp_path):
    started = time.monotonic()
    seeds = make_seeds(25, rng_seed=7)
    wrong = {seeds[5].id, seeds[13].id, seeds[21].id}
    scripts = pipeline_scripts(seeds, wrong_answer_ids=wrong)
    seeds_path = tmp_path / "seeds.jsonl"
    write_records(seeds_path, seeds)

    first = _run_chain(tmp_path / "run1", seeds_path, scripts)
    second = _run_chain(tmp_path / "run2", seeds_path, scripts)
    elapsed = time.monotonic() - started

    records = first[3]
    grammar_ok = all(SFT_TARGET_RE.match(r.target) and parse_sft_target(r.target) == (r.think, r.answer) for r in records)
    byte_identical = first[:3] == second[:3]
    _report(
        "end-to-end synthesis",
        len(records) >= 20 and grammar_ok and byte_identical and elapsed < 60,
        f"{len(records)} records, byte-identical={byte_identical}, {elapsed:.2f}s",
    )


# -----------------------------------------------------------------------------
# Dual-expert loop over 200 fuzzed scripts.
# -----------------------------------------------------------------------------


def test_acceptance_dual_expert_fuzz():
    rng = random.Random(20240808)
    seeds = make_seeds(200, rng_seed=31)
    config_args = dict(max_iterations=4, steps_per_iteration=3, max_knowledge_requests=1)
    checked_narrations = 0
    gt_runs = 0
    for i, seed in enumerate(seeds):
        gt_guided = i % 2 == 0
        config = LoopConfig(
            reasoning_backend_id="reason",
            reflection_backend_id="reflect",
            gt_guided=gt_guided,
            **config_args,
        )
        plan = fuzz_plan(seed, config, rng)
        reasoning, reflection = loop_scripts(plan)
        gw = Gateway()
        gw.register(BackendConfig(id="reason", kind="mock", script=reasoning))
        gw.register(BackendConfig(id="reflect", kind="mock", script=reflection))
        engine = DualExpertEngine(gw, config)
        trace = engine.run_loop(seed)

        assert trace.termination == plan.expected_termination
        assert engine.calls_made <= call_budget(config), "terminated outside the call budget"
        assert trace.iterations <= config.max_iterations
        assert all(s.rating in (0, 1) for s in trace.steps), "a step lost its rating"
        assert [s.index for s in trace.steps] == list(range(len(trace.steps)))

        if gt_guided:
            gt_runs += 1
            reflection_prompts = gw.prompts_for("reflect")
            reasoning_prompts = gw.prompts_for("reason")
            assert reflection_prompts and all(seed.ground_truth in p for p in reflection_prompts)
            assert not any(seed.ground_truth in p for p in reasoning_prompts)

        kept = [s.content for s in trace.rated_steps(1)]
        dropped = [s.content for s in trace.rated_steps(0)]
        if trace.termination == "diagnosed" and kept:
            narrator = Gateway()
            narrator.register(
                BackendConfig(id="n", kind="mock", script=[narration_reply(kept, trace.final_answer)])
            )
            think = narrate_first_person(narrator, "n", trace)
            assert isinstance(think, str)
            narrate_prompt = narrator.prompts_for("n")[0]
            for content in dropped:
                assert content not in narrate_prompt, "rating-0 step leaked into the narration prompt"
                assert content not in think, "rating-0 step leaked into narrated output"
            checked_narrations += 1
    _report(
        "dual-expert fuzz",
        checked_narrations > 30 and gt_runs == 100,
        f"200 runs, {gt_runs} gt-guided, {checked_narrations} narrations audited",
    )


# -----------------------------------------------------------------------------
# Preference builder: scripted 20-response group + 1,000 fuzzed groups.
# -----------------------------------------------------------------------------

PREF_SEED = QuestionSeed(
    id="pref-s1",
    source="synthetic",
    stem="Which diagnosis fits best?",
    options={"A": "acute bronchitis", "B": "tuberculosis", "C": "pneumonia x", "D": "asthma"},
    correct_label="C",
    ground_truth="The findings point squarely at pneumonia x.",
)


def _resp(index, label, score):
    text = {"A": "acute bronchitis", "B": "tuberculosis", "C": "pneumonia x", "D": "asthma", None: "no idea"}[label]
    r = SampledResponse(index=index, target=serialize_sft_target(f"thinking {index}", text), score=float(score))
    r.mapped_label = label
    return r


def test_acceptance_preference_builder():
    # hand-enumerated 20-response group exercising every selection rule:
    # goods (C): indexes 0,3,7,11,15,19 scores 7,9,4,9,8,2 -> max 9, index tie 3 vs 11 -> 3
    # bads: A x5 (idx 1,4,8,12,16; scores 4,3,3,6,5) modal label
    #       B x4 (idx 2,5,9,13;   scores 1,2,2,2)  lower scores but not modal
    #       D x2 (idx 6,10;       scores 0,1)
    # unmapped: idx 14,17,18
    # -> rejected: modal label A, min score 3, index tie 4 vs 8 -> 4
    spec = [
        (0, "C", 7), (1, "A", 4), (2, "B", 1), (3, "C", 9), (4, "A", 3),
        (5, "B", 2), (6, "D", 0), (7, "C", 4), (8, "A", 3), (9, "B", 2),
        (10, "D", 1), (11, "C", 9), (12, "A", 6), (13, "B", 2), (14, None, 5),
        (15, "C", 8), (16, "A", 5), (17, None, 9), (18, None, 0), (19, "C", 2),
    ]
    responses = [_resp(i, label, score) for i, label, score in spec]
    record = build_pair(PREF_SEED, responses, "open input")
    oracle_chosen, oracle_rejected = oracle_build_pair(PREF_SEED, responses)
    assert oracle_chosen.index == 3 and oracle_rejected.index == 4  # the enumeration above
    exact = (
        record.chosen == responses[3].target
        and record.rejected == responses[4].target
        and record.meta["chosen_score"] == 9.0
        and record.meta["rejected_score"] == 3.0
        and record.meta["rejected_label"] == "A"
    )

    rng = random.Random(424242)
    seeds = make_seeds(50, rng_seed=12)
    emitted = mixed = 0
    for g in range(1000):
        seed = seeds[g % len(seeds)]
        labels = list(seed.options)
        responses = []
        for i in range(rng.randint(2, 20)):
            roll = rng.random()
            if roll < 0.3:
                label = seed.correct_label
            elif roll < 0.8:
                label = rng.choice([l for l in labels if l != seed.correct_label])
            else:
                label = None
            r = SampledResponse(index=i, target=serialize_sft_target("t", "x"), score=float(rng.randint(0, 10)))
            r.mapped_label = label
            responses.append(r)
        oracle = oracle_build_pair(seed, responses)
        record = build_pair(seed, responses, "open input")
        if oracle is None:
            assert record is None
            continue
        mixed += 1
        assert record is not None
        emitted += 1
        chosen, rejected = oracle
        assert record.meta["chosen_score"] == chosen.score
        assert record.meta["rejected_score"] == rejected.score
        assert record.meta["chosen_label"] == seed.correct_label
        assert record.meta["rejected_label"] == rejected.mapped_label
        assert record.meta["rejected_label"] != seed.correct_label
    _report(
        "preference builder",
        exact and emitted == mixed and mixed > 300,
        f"scripted group exact={exact}; {mixed} mixed groups, {emitted} pairs",
    )


# -----------------------------------------------------------------------------
# Bandit.
# -----------------------------------------------------------------------------


def test_acceptance_bandit():
    started = time.monotonic()

    state = init_mixer(["a", "b"], floor=0.05, eta=0.1)
    for i in range(250):
        state = update(state, RewardEvent("a", 0.9, 2 * i), pre_normalized=True)
        state = update(state, RewardEvent("b", 0.1, 2 * i + 1), pre_normalized=True)
    dominant = sample_ratios(state)["a"]

    equal_state = init_mixer(["a", "b"], floor=0.05, eta=0.1)
    equal_events = []
    for i in range(250):
        equal_events.append(RewardEvent("a", 0.5, 2 * i))
        equal_events.append(RewardEvent("b", 0.5, 2 * i + 1))
    vectors = schedule(equal_state, equal_events, 50)
    equal_ok = all(abs(v[s] - 0.5) <= 0.01 for v in vectors for s in ("a", "b"))

    simplex_ok = True
    sim_state = init_mixer(["a", "b", "c"], floor=0.02, eta=0.2)
    rng = random.Random(5)
    for i in range(300):
        sim_state = update(
            sim_state,
            RewardEvent(rng.choice(["a", "b", "c"]), rng.random(), i),
            pre_normalized=True,
        )
        ratios = sample_ratios(sim_state)
        if abs(sum(ratios.values()) - 1.0) > 1e-12 or any(p < 0.02 - 1e-12 for p in ratios.values()):
            simplex_ok = False

    closed_state = init_mixer(["a", "b"], floor=0.0, eta=0.1)
    closed_state = update(closed_state, RewardEvent("a", 1.0, 0), pre_normalized=True)
    expected = math.exp(0.1) / (math.exp(0.1) + 1)
    closed_ok = abs(sample_ratios(closed_state)["a"] - expected) <= 1e-12

    elapsed = time.monotonic() - started
    _report(
        "bandit",
        dominant >= 0.70 and equal_ok and simplex_ok and closed_ok and elapsed < 5,
        f"dominant={dominant:.4f}, closed-form ok={closed_ok}, {elapsed:.2f}s",
    )


# -----------------------------------------------------------------------------
# Foundry over 100 synthetic dialogues.
# -----------------------------------------------------------------------------


def test_acceptance_foundry():
    dialogues = make_dialogues(100, rng_seed=41, near_duplicates=2)
    tau = 0.8
    clean = [deidentify_dialogue(d) for d in dialogues]
    kept, dropped = dedup_complaints(clean, tau=tau)
    emr_replies, question_replies = foundry_scripts(kept, rng_seed=13)
    gw = Gateway()
    gw.register(BackendConfig(id="emr", kind="mock", script=emr_replies))
    gw.register(BackendConfig(id="q", kind="mock", script=question_replies))
    outcome = build_items(gw, "emr", "q", dialogues, icd_vocabulary(), tau=tau, rng_seed=99)

    items_ok = bool(outcome.items)
    for item in outcome.items:
        answer = item.options[item.answer_index]
        if not (
            len(item.options) == 21
            and len(set(item.options)) == 21
            and item.options[20] == NONE_OF_THE_ABOVE
            and item.answer_index < 20
            and item.options.count(answer) == 1
        ):
            items_ok = False

    deid_ok = all(rule_match_count(e["prompt"], DEFAULT_DEID_RULES) == 0 for e in gw.log)
    for item in outcome.items:
        blob = json.dumps(item.to_dict(), ensure_ascii=False)
        if rule_match_count(blob, DEFAULT_DEID_RULES) != 0:
            deid_ok = False

    dedup_ok = len(dropped) == 2 and len(kept) + len(dropped) == 100
    complaints = [d.turns[0]["text"] for d in kept]
    for i in range(len(complaints)):
        for j in range(i + 1, len(complaints)):
            if jaccard(complaints[i], complaints[j]) >= tau:
                dedup_ok = False
    worked_example = jaccard("headache for 3 days", "headache for three days")
    jaccard_ok = worked_example == pytest.approx(3 / 5)

    stats = compute_stats(stats_fixture_items(58, 42))
    stats_ok = stats["gender"]["male"]["pct"] == 58.0 and stats["gender"]["female"]["pct"] == 42.0

    _report(
        "foundry",
        items_ok and deid_ok and dedup_ok and jaccard_ok and stats_ok,
        f"{len(outcome.items)} items from 100 dialogues, jaccard example={worked_example:.2f}, "
        f"gender {stats['gender']['male']['pct']:.2f}%/{stats['gender']['female']['pct']:.2f}%",
    )


# -----------------------------------------------------------------------------
# Review state machine.
# -----------------------------------------------------------------------------


def _pending_item(ident: str, tier: int = 1, version: int = 0) -> FoundryItem:
    options = [f"dx {i} ({ident})" for i in range(20)] + [NONE_OF_THE_ABOVE]
    from medforge.records import Emr

    return FoundryItem(
        id=ident,
        department="cardiology",
        emr=Emr(
            chief_complaint="chest pain",
            present_illness="2 days",
            past_history="none",
            allergy_history="none",
            exams=[],
            diagnosis="dx 0",
        ),
        question="What fits?",
        options=options,
        answer_index=0,
        review=ReviewState(tier=tier, status="pending", history=[], version=version),
    )


def test_acceptance_review_state_machine():
    table_ok = True
    for item_tier in (1, 2, 3):
        for decision_tier in (1, 2, 3):
            for verb in ("approve", "reject"):
                state = ReviewState(tier=item_tier, status="pending", history=[], version=0)
                decision = ReviewDecision(
                    item_id="x",
                    tier=decision_tier,
                    reviewer_id="r",
                    decision=verb,
                    expected_version=0,
                    criterion="diagnostic-error" if verb == "reject" else None,
                )
                try:
                    out = transition(state, decision, timestamp=0)
                except Exception:
                    if decision_tier == item_tier:
                        table_ok = False
                    continue
                if decision_tier != item_tier:
                    table_ok = False
                elif verb == "reject" and out.status != "rejected":
                    table_ok = False
                elif verb == "approve" and item_tier == 3 and out.status != "final":
                    table_ok = False
                elif verb == "approve" and item_tier < 3 and (out.status, out.tier) != ("pending", item_tier + 1):
                    table_ok = False

    store = ReviewStore([_pending_item("contested")])

    def attempt(i):
        try:
            store.apply_review(
                ReviewDecision(
                    item_id="contested", tier=1, reviewer_id=f"rev-{i}", decision="approve", expected_version=0
                )
            )
            return "ok"
        except VersionConflictError:
            return "conflict"

    with ThreadPoolExecutor(max_workers=50) as pool:
        outcomes = list(pool.map(attempt, range(50)))
    concurrency_ok = outcomes.count("ok") == 1 and outcomes.count("conflict") == 49

    finalized_ok = True
    store2 = ReviewStore([_pending_item(f"it-{i}") for i in range(5)])
    for i in range(5):
        for tier in (1, 2, 3):
            current = store2.get(f"it-{i}")
            store2.apply_review(
                ReviewDecision(
                    item_id=current.id,
                    tier=tier,
                    reviewer_id=f"rev-{tier}",
                    decision="approve",
                    expected_version=current.review.version,
                )
            )
        final = store2.get(f"it-{i}")
        if not finalized_cleanly(final):
            finalized_ok = False

    _report(
        "review state machine",
        table_ok and concurrency_ok and finalized_ok,
        f"transition table ok={table_ok}, 1 winner/49 conflicts={concurrency_ok}",
    )


# -----------------------------------------------------------------------------
# Eval harness.
# -----------------------------------------------------------------------------


def test_acceptance_eval_harness():
    items = []
    rng = random.Random(2)
    for i in range(1000):
        labels = ["A", "B", "C", "D"]
        items.append(
            EvalItem(
                id=f"m-{i:04d}",
                benchmark="medqa",
                stem=f"Case {i}: what is the most likely diagnosis?",
                options={l: f"candidate {i}-{l}" for l in labels},
                correct_label=rng.choice(labels),
            )
        )
    script = []
    for i, item in enumerate(items):
        if i < 887:
            script.append(f"<answer>{item.options[item.correct_label]}</answer>")
        else:
            script.append("inconclusive presentation, cannot decide")
    gw = Gateway()
    gw.register(BackendConfig(id="model", kind="mock", script=script))
    result = evaluate(gw, "model", items)
    accuracy_ok = result.n_correct == 887 and round(result.accuracy, 4) == 0.8870

    grid = [
        EvalResult(benchmark="medqa", model_id="medreason-70b", n_items=1273, n_correct=1132, accuracy=0.8892, per_item=[]),
        EvalResult(benchmark="medqa", model_id="llama-70b", n_items=1273, n_correct=983, accuracy=0.7722, per_item=[]),
        EvalResult(benchmark="medqa", model_id="distill-70b", n_items=1273, n_correct=1107, accuracy=0.8696, per_item=[]),
    ]
    table = render_report(grid)
    report_ok = "**0.8892**" in table and "<u>0.8696</u>" in table and "**0.7722**" not in table

    _report(
        "eval harness",
        accuracy_ok and report_ok,
        f"accuracy={result.accuracy:.4f}, report bold/underline ok={report_ok}",
    )


# -----------------------------------------------------------------------------
# Round trips over 1,000 fuzzed records each.
# -----------------------------------------------------------------------------


def test_acceptance_round_trips(tmp_path):
    jsonl_ok = True
    for kind, fuzzer in sorted(ALL_FUZZERS.items()):
        rng = random.Random(hash(kind) % (2**32))
        records = [fuzzer(rng, i) for i in range(1000)]
        path = tmp_path / f"{kind}.jsonl"
        write_records(path, records)
        back = list(read_records(path, kind))
        if [r.to_dict() for r in back] != [r.to_dict() for r in records]:
            jsonl_ok = False
        path2 = tmp_path / f"{kind}.2.jsonl"
        write_records(path2, back)
        if path.read_bytes() != path2.read_bytes():
            jsonl_ok = False

    rng = random.Random(77)
    sft_ok = True
    for i in range(1000):
        think = " ".join(rng.choice(["so", "fever", "检查", "état", "next"]) for _ in range(rng.randint(0, 12)))
        answer = " ".join(rng.choice(["pneumonia", "asthma", "флю"]) for _ in range(rng.randint(1, 4)))
        target = serialize_sft_target(think, answer)
        if parse_sft_target(target) != (think, answer):
            sft_ok = False
    _report(
        "round trips",
        jsonl_ok and sft_ok,
        f"{len(ALL_FUZZERS)} record kinds x 1000 + 1000 sft targets",
    )
