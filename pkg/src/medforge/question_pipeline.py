"""Seed preparation and trace-to-SFT conversion.

Closed seeds are rewritten to open questions, triaged easy/hard by a model
panel, and the dual-expert traces are narrated into first-person thinking
text under four re-checkable constraints before the final training record
is emitted.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

from .gateway import Gateway
from .preference import map_answer, match_option_text
from .records import OpenQuestion, QuestionSeed, ReasoningTrace, RecordError, SftRecord, serialize_sft_target

TRANSITION_WORDS = ("furthermore", "therefore", "then", "wait", "so", "however")

_LABEL_MARKER_RE = re.compile(r"\b[A-U]\)")


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class Rejection:
    """A seed/trace the pipeline dropped, with the validator's reason."""

    kind: str  # rejected-seed | rejected-trace
    ref_id: str
    reason: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ref_id": self.ref_id, "reason": self.reason}


@dataclass(frozen=True)
class TriagePanel:
    member_backend_ids: tuple[str, ...]
    voting_rule: str = "all_correct_easy"

    def __post_init__(self) -> None:
        if not self.member_backend_ids:
            raise PipelineError("panel needs at least one member")
        if self.voting_rule != "all_correct_easy":
            raise PipelineError(f"unknown voting rule {self.voting_rule!r}")


# -- closed -> open rewriting -------------------------------------------------


def open_stem_violations(stem: str, seed: QuestionSeed) -> list[str]:
    """Why a rewritten stem is not acceptably option-free (empty list = ok)."""
    problems = []
    if stem.strip() == "":
        problems.append("empty stem")
        return problems
    for label, text in seed.options.items():
        if text in stem:
            problems.append(f"contains option {label} text verbatim")
    low = stem.casefold()
    if "following" in low and "option" in low:
        problems.append("option-dependent phrasing (following/option)")
    if _LABEL_MARKER_RE.search(stem):
        problems.append("contains a letter-label marker like 'A)'")
    return problems


def rewrite_open(gateway: Gateway, backend_id: str, seed: QuestionSeed) -> OpenQuestion | Rejection:
    """One rewrite call (plus one re-ask) producing a validated OpenQuestion."""
    if seed.stem.strip() == "":
        raise PipelineError("seed stem is empty")
    prompt = gateway.render("rewrite_open", stem=seed.stem)
    problems: list[str] = []
    for _ in range(2):
        stem = gateway.ask(backend_id, prompt).strip()
        problems = open_stem_violations(stem, seed)
        if not problems:
            return OpenQuestion(seed_id=seed.id, open_stem=stem, rewrite_notes="model-rewritten")
    return Rejection(kind="rejected-seed", ref_id=seed.id, reason="; ".join(problems))


# -- difficulty triage --------------------------------------------------------


def _options_block(seed: QuestionSeed) -> str:
    return "\n".join(f"{label}. {text}" for label, text in seed.options.items())


@dataclass(frozen=True)
class TriageResult:
    difficulty: str  # easy | hard
    votes: tuple[tuple[str, str | None], ...]  # (backend_id, mapped label)


def triage_difficulty(gateway: Gateway, seed: QuestionSeed, panel: TriagePanel) -> TriageResult:
    """easy iff every panel member's mapped answer equals the correct label.

    Unmappable answers count as incorrect and are recorded in the votes.
    """
    prompt = gateway.render("triage_answer", stem=seed.stem, options=_options_block(seed))
    votes = []
    all_correct = True
    for member in panel.member_backend_ids:
        reply = gateway.ask(member, prompt)
        label = map_answer(reply, seed)
        votes.append((member, label))
        if label != seed.correct_label:
            all_correct = False
    return TriageResult(difficulty="easy" if all_correct else "hard", votes=tuple(votes))


def sample_training_pool(
    easy: list[QuestionSeed], hard: list[QuestionSeed], easy_fraction: float, rng_seed: int
) -> list[QuestionSeed]:
    """All hard seeds plus a uniform floor(fraction*|easy|) sample of easy ones."""
    if not 0 <= easy_fraction <= 1:
        raise PipelineError(f"easy_fraction must be in [0, 1], got {easy_fraction}")
    take = math.floor(easy_fraction * len(easy))
    rng = random.Random(rng_seed)
    sampled = rng.sample(sorted(easy, key=lambda s: s.id), take) if take else []
    return list(hard) + sampled


# -- first-person narration ---------------------------------------------------

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT_RE.split(text.strip()) if s.strip()]


def _normalize_sentence(sentence: str) -> str:
    return " ".join(sentence.casefold().strip(".!? ").split())


def word_count(text: str) -> int:
    return len(text.split())


def narration_violations(think: str, rated_step_contents: list[str], final_answer: str) -> list[str]:
    """Re-runnable pure validators for the four narration constraints."""
    problems = []
    source_words = word_count(" ".join(rated_step_contents))
    narrated_words = word_count(think)
    if not (0.5 * source_words <= narrated_words <= 2 * source_words):
        problems.append(
            f"thought scale off: {narrated_words} words vs source {source_words} (allowed {0.5 * source_words:.0f}-{2 * source_words:.0f})"
        )
    sentences = split_sentences(think)
    normalized = [_normalize_sentence(s) for s in sentences]
    if len(set(normalized)) != len(normalized):
        problems.append("duplicated sentence")
    if final_answer not in think:
        problems.append("final answer missing verbatim")
    needed = math.ceil(len(sentences) / 3) if sentences else 1
    low = think.casefold()
    transitions = sum(len(re.findall(rf"\b{w}\b", low)) for w in TRANSITION_WORDS)
    if transitions < needed:
        problems.append(f"too few transition words: {transitions} < {needed}")
    return problems


def narrate_first_person(gateway: Gateway, backend_id: str, trace: ReasoningTrace) -> str | Rejection:
    """Rewrite the rating-1 steps into one first-person monologue.

    Only validated steps feed the prompt; rating-0 steps stay in the trace
    for loop context but are excluded from the narrated output.
    """
    kept = [s.content for s in trace.rated_steps(1)]
    if not kept:
        raise PipelineError(f"trace {trace.seed_id} has no rating-1 step")
    prompt = gateway.render("narrate", steps="\n".join(kept), answer=trace.final_answer)
    problems: list[str] = []
    for _ in range(2):
        think = gateway.ask(backend_id, prompt).strip()
        problems = narration_violations(think, kept, trace.final_answer)
        if not problems:
            return think
    return Rejection(kind="rejected-trace", ref_id=trace.seed_id, reason="; ".join(problems))


# -- SFT emission -------------------------------------------------------------


def emit_sft(open_question: OpenQuestion, think: str, answer: str) -> tuple[SftRecord, str]:
    """Build the record and its serialized target; tag literals are errors."""
    record = SftRecord(input=open_question.open_stem, think=think, answer=answer)
    return record, record.target


def trace_answer_is_correct(trace: ReasoningTrace, seed: QuestionSeed) -> bool:
    """A trace is trainable only when its answer maps to the correct label."""
    return match_option_text(trace.final_answer, seed) == seed.correct_label


@dataclass
class SynthesisOutcome:
    records: list[SftRecord] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)


def traces_to_sft(
    gateway: Gateway,
    narrate_backend_id: str,
    seeds_by_id: dict[str, QuestionSeed],
    opens_by_id: dict[str, OpenQuestion],
    traces: list[ReasoningTrace],
) -> SynthesisOutcome:
    """Narrate + emit for every usable trace; everything else is logged.

    Drops traces that did not diagnose, answered incorrectly, or lack a
    rating-1 step, and narrations that fail their validators.
    """
    out = SynthesisOutcome()
    for trace in traces:
        seed = seeds_by_id.get(trace.seed_id)
        open_q = opens_by_id.get(trace.seed_id)
        if seed is None or open_q is None:
            out.rejections.append(Rejection("rejected-trace", trace.seed_id, "no matching seed/open question"))
            continue
        if trace.termination != "diagnosed":
            out.rejections.append(Rejection("rejected-trace", trace.seed_id, f"termination {trace.termination}"))
            continue
        if not trace_answer_is_correct(trace, seed):
            out.rejections.append(Rejection("rejected-trace", trace.seed_id, "final answer does not map to correct label"))
            continue
        if not trace.rated_steps(1):
            out.rejections.append(Rejection("rejected-trace", trace.seed_id, "no rating-1 steps"))
            continue
        narrated = narrate_first_person(gateway, narrate_backend_id, trace)
        if isinstance(narrated, Rejection):
            out.rejections.append(narrated)
            continue
        try:
            record, _ = emit_sft(open_q, narrated, trace.final_answer)
        except RecordError as exc:
            out.rejections.append(Rejection("rejected-trace", trace.seed_id, exc.raw_message))
            continue
        out.records.append(record)
    return out
