"""Shared domain records and the line-oriented JSONL persistence layer.

Every pipeline stage reads and writes these types. Records are immutable
values; every invariant is enforced at construction / deserialization time,
never deferred. Canonical encoding is UTF-8 JSONL with lexicographically
ordered keys so that identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

# First 21 uppercase Latin letters; labels for up to 21 options.
OPTION_LABELS = tuple("ABCDEFGHIJKLMNOPQRSTU")
NONE_OF_THE_ABOVE = "None of the above"

DIFFICULTIES = frozenset({"unknown", "easy", "hard"})
TERMINATIONS = frozenset({"diagnosed", "budget_exhausted", "knowledge_limit"})
GENDERS = frozenset({"male", "female"})
SPEAKERS = frozenset({"patient", "doctor"})
REVIEW_STATUSES = frozenset({"pending", "approved", "rejected", "final"})

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
ANSWER_OPEN = "<answer>"
ANSWER_CLOSE = "</answer>"
_SFT_TAGS = (THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE)


class RecordError(ValueError):
    """Validation or parse failure for a record.

    ``field`` names the offending field when known; ``line`` carries the
    1-based line number when raised by the JSONL reader.
    """

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        self.raw_message = message
        self.field = field
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        suffix = f" (field: {field})" if field else ""
        super().__init__(f"{prefix}{message}{suffix}")


def _require(cond: bool, message: str, field_name: str) -> None:
    if not cond:
        raise RecordError(message, field=field_name)


def _req_str(value: Any, field_name: str, *, nonempty: bool = True) -> str:
    _require(isinstance(value, str), f"expected string, got {type(value).__name__}", field_name)
    if nonempty:
        _require(value.strip() != "", "must be nonempty", field_name)
    return value


def _req_int(value: Any, field_name: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), "expected integer", field_name)
    return value


def _req_list(value: Any, field_name: str) -> list:
    _require(isinstance(value, list), "expected list", field_name)
    return value


def _req_dict(value: Any, field_name: str) -> dict:
    _require(isinstance(value, dict), "expected object", field_name)
    return value


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuestionSeed:
    """A closed-form MCQ with verified ground truth; fuel for synthesis."""

    id: str
    source: str
    stem: str
    options: dict[str, str]  # ordered label -> text
    correct_label: str
    ground_truth: str
    difficulty: str = "unknown"

    def __post_init__(self) -> None:
        _req_str(self.id, "id")
        _req_str(self.source, "source")
        _req_str(self.stem, "stem")
        _req_str(self.ground_truth, "ground_truth")
        opts = _req_dict(self.options, "options")
        _require(2 <= len(opts) <= 21, f"need 2-21 options, got {len(opts)}", "options")
        for label, text in opts.items():
            _require(label in OPTION_LABELS, f"label {label!r} outside A-U", "options")
            _req_str(text, "options")
        texts = list(opts.values())
        _require(len(set(texts)) == len(texts), "option texts must be pairwise distinct", "options")
        _require(self.correct_label in opts, f"correct_label {self.correct_label!r} not in options", "correct_label")
        _require(self.difficulty in DIFFICULTIES, f"bad difficulty {self.difficulty!r}", "difficulty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "stem": self.stem,
            "options": dict(self.options),
            "correct_label": self.correct_label,
            "ground_truth": self.ground_truth,
            "difficulty": self.difficulty,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuestionSeed":
        return cls(
            id=d.get("id", ""),
            source=d.get("source", ""),
            stem=d.get("stem", ""),
            options=d.get("options", {}),
            correct_label=d.get("correct_label", ""),
            ground_truth=d.get("ground_truth", ""),
            difficulty=d.get("difficulty", "unknown"),
        )


@dataclass(frozen=True)
class OpenQuestion:
    """Open-ended rewrite of a seed, with option dependencies removed."""

    seed_id: str
    open_stem: str
    rewrite_notes: str = ""

    def __post_init__(self) -> None:
        _req_str(self.seed_id, "seed_id")
        _req_str(self.open_stem, "open_stem")
        _req_str(self.rewrite_notes, "rewrite_notes", nonempty=False)

    def to_dict(self) -> dict:
        return {"seed_id": self.seed_id, "open_stem": self.open_stem, "rewrite_notes": self.rewrite_notes}

    @classmethod
    def from_dict(cls, d: dict) -> "OpenQuestion":
        return cls(
            seed_id=d.get("seed_id", ""),
            open_stem=d.get("open_stem", ""),
            rewrite_notes=d.get("rewrite_notes", ""),
        )


@dataclass(frozen=True)
class ReasoningStep:
    index: int
    content: str
    feedback: str
    rating: int

    def __post_init__(self) -> None:
        _require(_req_int(self.index, "index") >= 0, "index must be >= 0", "index")
        _req_str(self.content, "content")
        _req_str(self.feedback, "feedback", nonempty=False)
        _require(self.rating in (0, 1), f"rating must be 0 or 1, got {self.rating!r}", "rating")

    def to_dict(self) -> dict:
        return {"index": self.index, "content": self.content, "feedback": self.feedback, "rating": self.rating}

    @classmethod
    def from_dict(cls, d: dict) -> "ReasoningStep":
        return cls(
            index=d.get("index", -1),
            content=d.get("content", ""),
            feedback=d.get("feedback", ""),
            rating=d.get("rating", -1),
        )


@dataclass(frozen=True)
class ReasoningTrace:
    """Output of the dual-expert loop: rated steps plus termination state."""

    seed_id: str
    known_facts: list[str]
    hypotheses: list[str]
    steps: list[ReasoningStep]
    final_answer: str
    termination: str
    iterations: int

    def __post_init__(self) -> None:
        _req_str(self.seed_id, "seed_id")
        for fact in _req_list(self.known_facts, "known_facts"):
            _req_str(fact, "known_facts")
        for hyp in _req_list(self.hypotheses, "hypotheses"):
            _req_str(hyp, "hypotheses")
        _req_list(self.steps, "steps")
        for i, step in enumerate(self.steps):
            _require(isinstance(step, ReasoningStep), "steps must hold ReasoningStep values", "steps")
            _require(step.index == i, f"step indexes must be contiguous from 0 (got {step.index} at {i})", "steps")
        _require(self.termination in TERMINATIONS, f"bad termination {self.termination!r}", "termination")
        _req_str(self.final_answer, "final_answer", nonempty=False)
        if self.termination == "diagnosed":
            _require(self.final_answer.strip() != "", "diagnosed trace needs a final_answer", "final_answer")
        _require(_req_int(self.iterations, "iterations") >= 0, "iterations must be >= 0", "iterations")

    def rated_steps(self, rating: int) -> list[ReasoningStep]:
        return [s for s in self.steps if s.rating == rating]

    def to_dict(self) -> dict:
        return {
            "seed_id": self.seed_id,
            "known_facts": list(self.known_facts),
            "hypotheses": list(self.hypotheses),
            "steps": [s.to_dict() for s in self.steps],
            "final_answer": self.final_answer,
            "termination": self.termination,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReasoningTrace":
        steps_raw = d.get("steps", [])
        _req_list(steps_raw, "steps")
        return cls(
            seed_id=d.get("seed_id", ""),
            known_facts=d.get("known_facts", []),
            hypotheses=d.get("hypotheses", []),
            steps=[ReasoningStep.from_dict(_req_dict(s, "steps")) for s in steps_raw],
            final_answer=d.get("final_answer", ""),
            termination=d.get("termination", ""),
            iterations=d.get("iterations", -1),
        )


def contains_sft_tag(text: str) -> bool:
    return any(tag in text for tag in _SFT_TAGS)


def serialize_sft_target(think: str, answer: str) -> str:
    """Build the exact <think>..</think><answer>..</answer> target string."""
    if contains_sft_tag(think):
        raise RecordError("think contains a tag literal", field="think")
    if contains_sft_tag(answer):
        raise RecordError("answer contains a tag literal", field="answer")
    if answer.strip() == "":
        raise RecordError("answer must be nonempty", field="answer")
    return f"{THINK_OPEN}{think}{THINK_CLOSE}{ANSWER_OPEN}{answer}{ANSWER_CLOSE}"


def parse_sft_target(target: str) -> tuple[str, str]:
    """Inverse of serialize_sft_target; strict, no surrounding slack allowed."""
    if not target.startswith(THINK_OPEN) or not target.endswith(ANSWER_CLOSE):
        raise RecordError("target does not match sft grammar", field="target")
    close = target.find(THINK_CLOSE)
    if close < 0:
        raise RecordError("missing </think>", field="target")
    think = target[len(THINK_OPEN):close]
    middle = target[close + len(THINK_CLOSE):]
    if not middle.startswith(ANSWER_OPEN):
        raise RecordError("expected <answer> right after </think>", field="target")
    answer = middle[len(ANSWER_OPEN):-len(ANSWER_CLOSE)]
    if contains_sft_tag(think) or contains_sft_tag(answer):
        raise RecordError("tag literal inside think/answer", field="target")
    if answer.strip() == "":
        raise RecordError("answer must be nonempty", field="target")
    return think, answer


def is_sft_target(target: str) -> bool:
    try:
        parse_sft_target(target)
    except RecordError:
        return False
    return True


@dataclass(frozen=True)
class SftRecord:
    """One supervised training pair; target = <think>T</think><answer>A</answer>."""

    input: str
    think: str
    answer: str

    def __post_init__(self) -> None:
        _req_str(self.input, "input")
        _req_str(self.think, "think", nonempty=False)
        _req_str(self.answer, "answer")
        serialize_sft_target(self.think, self.answer)  # enforces tag-freedom

    @property
    def target(self) -> str:
        return serialize_sft_target(self.think, self.answer)

    def to_dict(self) -> dict:
        return {"input": self.input, "think": self.think, "answer": self.answer}

    @classmethod
    def from_dict(cls, d: dict) -> "SftRecord":
        return cls(input=d.get("input", ""), think=d.get("think", ""), answer=d.get("answer", ""))


@dataclass(frozen=True)
class PreferenceRecord:
    """<input, chosen, rejected> pair; chosen/rejected are serialized sft targets."""

    input: str
    chosen: str
    rejected: str
    meta: dict

    def __post_init__(self) -> None:
        _req_str(self.input, "input")
        _req_str(self.chosen, "chosen")
        _req_str(self.rejected, "rejected")
        parse_sft_target(self.chosen)
        parse_sft_target(self.rejected)
        meta = _req_dict(self.meta, "meta")
        for key in ("chosen_score", "rejected_score", "chosen_label", "rejected_label", "correct_label"):
            _require(key in meta, f"meta missing {key}", "meta")
        for key in ("chosen_score", "rejected_score"):
            _require(
                isinstance(meta[key], (int, float)) and math.isfinite(meta[key]),
                f"meta.{key} must be a finite number",
                "meta",
            )
        _require(meta["chosen_label"] == meta["correct_label"], "chosen_label must equal correct_label", "meta")
        _require(meta["rejected_label"] != meta["correct_label"], "rejected_label must differ from correct_label", "meta")

    def to_dict(self) -> dict:
        return {"input": self.input, "chosen": self.chosen, "rejected": self.rejected, "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, d: dict) -> "PreferenceRecord":
        return cls(
            input=d.get("input", ""),
            chosen=d.get("chosen", ""),
            rejected=d.get("rejected", ""),
            meta=d.get("meta", {}),
        )


@dataclass(frozen=True)
class DialogueRecord:
    """An anonymizable doctor-patient consultation transcript."""

    id: str
    department: str
    patient: dict  # {age: int 0-90, gender: male|female}
    turns: list[dict]  # [{speaker, text}]

    def __post_init__(self) -> None:
        _req_str(self.id, "id")
        _req_str(self.department, "department")
        patient = _req_dict(self.patient, "patient")
        age = _req_int(patient.get("age"), "patient.age")
        _require(0 <= age <= 90, f"age must be in [0, 90], got {age}", "patient.age")
        _require(patient.get("gender") in GENDERS, f"bad gender {patient.get('gender')!r}", "patient.gender")
        turns = _req_list(self.turns, "turns")
        speakers = set()
        for turn in turns:
            t = _req_dict(turn, "turns")
            _require(t.get("speaker") in SPEAKERS, f"bad speaker {t.get('speaker')!r}", "turns")
            _req_str(t.get("text"), "turns")
            speakers.add(t["speaker"])
        _require(speakers >= SPEAKERS, "need at least one turn per speaker", "turns")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "department": self.department,
            "patient": dict(self.patient),
            "turns": [dict(t) for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueRecord":
        return cls(
            id=d.get("id", ""),
            department=d.get("department", ""),
            patient=d.get("patient", {}),
            turns=d.get("turns", []),
        )


@dataclass(frozen=True)
class Emr:
    """Structured medical record distilled from one dialogue."""

    chief_complaint: str
    present_illness: str
    past_history: str
    allergy_history: str
    exams: list[str]
    diagnosis: str

    def __post_init__(self) -> None:
        _req_str(self.chief_complaint, "chief_complaint")
        _req_str(self.present_illness, "present_illness", nonempty=False)
        _req_str(self.past_history, "past_history", nonempty=False)
        _req_str(self.allergy_history, "allergy_history", nonempty=False)
        for exam in _req_list(self.exams, "exams"):
            _req_str(exam, "exams")
        _req_str(self.diagnosis, "diagnosis")

    def to_dict(self) -> dict:
        return {
            "chief_complaint": self.chief_complaint,
            "present_illness": self.present_illness,
            "past_history": self.past_history,
            "allergy_history": self.allergy_history,
            "exams": list(self.exams),
            "diagnosis": self.diagnosis,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Emr":
        return cls(
            chief_complaint=d.get("chief_complaint", ""),
            present_illness=d.get("present_illness", ""),
            past_history=d.get("past_history", ""),
            allergy_history=d.get("allergy_history", ""),
            exams=d.get("exams", []),
            diagnosis=d.get("diagnosis", ""),
        )


@dataclass(frozen=True)
class ReviewState:
    tier: int
    status: str
    history: list[dict]
    version: int

    def __post_init__(self) -> None:
        _require(_req_int(self.tier, "review.tier") in (1, 2, 3), f"tier must be 1-3, got {self.tier}", "review.tier")
        _require(self.status in REVIEW_STATUSES, f"bad status {self.status!r}", "review.status")
        history = _req_list(self.history, "review.history")
        tiers = []
        for entry in history:
            e = _req_dict(entry, "review.history")
            tiers.append(_req_int(e.get("tier"), "review.history"))
            _req_str(e.get("reviewer_id"), "review.history")
            _require(e.get("decision") in ("approve", "reject"), "decision must be approve/reject", "review.history")
        _require(all(a < b for a, b in zip(tiers, tiers[1:])), "history tiers must be strictly increasing", "review.history")
        _require(_req_int(self.version, "review.version") >= 0, "version must be >= 0", "review.version")

    def to_dict(self) -> dict:
        return {"tier": self.tier, "status": self.status, "history": [dict(h) for h in self.history], "version": self.version}

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewState":
        return cls(
            tier=d.get("tier", 0),
            status=d.get("status", ""),
            history=d.get("history", []),
            version=d.get("version", -1),
        )

    @classmethod
    def initial(cls) -> "ReviewState":
        return cls(tier=1, status="pending", history=[], version=0)


@dataclass(frozen=True)
class FoundryItem:
    """A 21-option benchmark question with EMR provenance and review state."""

    id: str
    department: str
    emr: Emr
    question: str
    options: list[str]
    answer_index: int
    review: ReviewState
    patient: dict | None = None  # optional {age, gender} passthrough for stats

    def __post_init__(self) -> None:
        _req_str(self.id, "id")
        _req_str(self.department, "department")
        _require(isinstance(self.emr, Emr), "emr must be an Emr", "emr")
        _req_str(self.question, "question")
        options = _req_list(self.options, "options")
        _require(len(options) == 21, f"need exactly 21 options, got {len(options)}", "options")
        for text in options:
            _req_str(text, "options")
        _require(len(set(options)) == 21, "options must be pairwise distinct", "options")
        _require(options[20] == NONE_OF_THE_ABOVE, f"option 21 must be {NONE_OF_THE_ABOVE!r}", "options")
        idx = _req_int(self.answer_index, "answer_index")
        _require(0 <= idx <= 20, f"answer_index must be in [0, 20], got {idx}", "answer_index")
        _require(isinstance(self.review, ReviewState), "review must be a ReviewState", "review")
        if self.patient is not None:
            patient = _req_dict(self.patient, "patient")
            age = _req_int(patient.get("age"), "patient.age")
            _require(0 <= age <= 90, "age must be in [0, 90]", "patient.age")
            _require(patient.get("gender") in GENDERS, "bad gender", "patient.gender")

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "department": self.department,
            "emr": self.emr.to_dict(),
            "question": self.question,
            "options": list(self.options),
            "answer_index": self.answer_index,
            "review": self.review.to_dict(),
        }
        if self.patient is not None:
            d["patient"] = dict(self.patient)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FoundryItem":
        return cls(
            id=d.get("id", ""),
            department=d.get("department", ""),
            emr=Emr.from_dict(_req_dict(d.get("emr", {}), "emr")),
            question=d.get("question", ""),
            options=d.get("options", []),
            answer_index=d.get("answer_index", -1),
            review=ReviewState.from_dict(_req_dict(d.get("review", {}), "review")),
            patient=d.get("patient"),
        )


@dataclass(frozen=True)
class MixerState:
    """Bandit arms over corpus sources plus the exploration floor.

    eta, window, and the per-arm recent-reward buffers are carried so a
    serialized state replays identically; see update() in mixer.py.
    """

    arms: list[dict]  # {source_id, weight, pulls, cum_reward, recent: [float]}
    t: int
    floor: float
    eta: float
    window: int

    def __post_init__(self) -> None:
        arms = _req_list(self.arms, "arms")
        _require(len(arms) >= 2, "need at least 2 arms", "arms")
        seen = set()
        total_pulls = 0
        for arm in arms:
            a = _req_dict(arm, "arms")
            sid = _req_str(a.get("source_id"), "arms.source_id")
            _require(sid not in seen, f"duplicate source_id {sid!r}", "arms.source_id")
            seen.add(sid)
            w = a.get("weight")
            _require(
                isinstance(w, (int, float)) and math.isfinite(w) and w > 0,
                "weights must be strictly positive and finite",
                "arms.weight",
            )
            total_pulls += _req_int(a.get("pulls"), "arms.pulls")
            _require(isinstance(a.get("cum_reward"), (int, float)), "cum_reward must be numeric", "arms.cum_reward")
            for r in _req_list(a.get("recent", []), "arms.recent"):
                _require(isinstance(r, (int, float)) and math.isfinite(r), "recent rewards must be finite", "arms.recent")
        k = len(arms)
        _require(
            isinstance(self.floor, (int, float)) and 0 <= self.floor <= 1 / k,
            f"floor must be in [0, 1/K], got {self.floor}",
            "floor",
        )
        _require(isinstance(self.eta, (int, float)) and self.eta > 0, "eta must be > 0", "eta")
        _require(_req_int(self.window, "window") >= 1, "window must be >= 1", "window")
        _require(_req_int(self.t, "t") == total_pulls, f"t ({self.t}) must equal sum of pulls ({total_pulls})", "t")

    def to_dict(self) -> dict:
        return {
            "arms": [dict(a) for a in self.arms],
            "t": self.t,
            "floor": self.floor,
            "eta": self.eta,
            "window": self.window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixerState":
        return cls(
            arms=d.get("arms", []),
            t=d.get("t", -1),
            floor=d.get("floor", -1.0),
            eta=d.get("eta", 0.0),
            window=d.get("window", 0),
        )


@dataclass(frozen=True)
class RewardEvent:
    """One observed per-source training-loss signal (higher = more to learn)."""

    source_id: str
    reward: float
    step: int

    def __post_init__(self) -> None:
        _req_str(self.source_id, "source_id")
        _require(
            isinstance(self.reward, (int, float)) and math.isfinite(self.reward),
            "reward must be finite",
            "reward",
        )
        _require(_req_int(self.step, "step") >= 0, "step must be >= 0", "step")

    def to_dict(self) -> dict:
        return {"source_id": self.source_id, "reward": self.reward, "step": self.step}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardEvent":
        return cls(source_id=d.get("source_id", ""), reward=d.get("reward", math.nan), step=d.get("step", -1))


@dataclass(frozen=True)
class EvalItem:
    """One benchmark MCQ normalized to the common schema."""

    id: str
    benchmark: str
    stem: str
    options: dict[str, str]
    correct_label: str

    def __post_init__(self) -> None:
        _req_str(self.id, "id")
        _req_str(self.benchmark, "benchmark")
        _req_str(self.stem, "stem")
        opts = _req_dict(self.options, "options")
        _require(2 <= len(opts) <= 21, f"need 2-21 options, got {len(opts)}", "options")
        for label, text in opts.items():
            _require(label in OPTION_LABELS, f"label {label!r} outside A-U", "options")
            _req_str(text, "options")
        texts = list(opts.values())
        _require(len(set(texts)) == len(texts), "option texts must be pairwise distinct", "options")
        _require(self.correct_label in opts, "correct_label not in options", "correct_label")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "benchmark": self.benchmark,
            "stem": self.stem,
            "options": dict(self.options),
            "correct_label": self.correct_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalItem":
        return cls(
            id=d.get("id", ""),
            benchmark=d.get("benchmark", ""),
            stem=d.get("stem", ""),
            options=d.get("options", {}),
            correct_label=d.get("correct_label", ""),
        )


# ---------------------------------------------------------------------------
# JSONL persistence
# ---------------------------------------------------------------------------

SCHEMAS: dict[str, type] = {
    "question_seed": QuestionSeed,
    "open_question": OpenQuestion,
    "reasoning_trace": ReasoningTrace,
    "sft": SftRecord,
    "preference": PreferenceRecord,
    "dialogue": DialogueRecord,
    "emr": Emr,
    "foundry_item": FoundryItem,
    "mixer_state": MixerState,
    "reward_event": RewardEvent,
    "eval_item": EvalItem,
}


def canonical_json(payload: Any) -> str:
    """Canonical one-line encoding: sorted keys, compact separators, raw UTF-8."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class _Pairs(list):
    """Marker wrapper so nested JSON objects keep their raw key/value pairs."""


def _pairs_to_value(value: Any, parent_key: str) -> Any:
    if isinstance(value, _Pairs):
        out: dict[str, Any] = {}
        for key, child in value:
            if key in out:
                raise RecordError(f"duplicate key {key!r}", field=parent_key or key)
            out[key] = _pairs_to_value(child, key)
        return out
    if isinstance(value, list):
        return [_pairs_to_value(v, parent_key) for v in value]
    return value


def parse_json_line(line: str) -> dict:
    """Parse one JSONL line into a dict, rejecting duplicate object keys."""
    raw = json.loads(line, object_pairs_hook=_Pairs)
    value = _pairs_to_value(raw, "")
    if not isinstance(value, dict):
        raise RecordError("line is not a JSON object")
    return value


def _resolve_schema(schema: str | type) -> type:
    if isinstance(schema, str):
        if schema not in SCHEMAS:
            raise RecordError(f"unknown schema {schema!r}")
        return SCHEMAS[schema]
    return schema


def read_records(path: str | Path, schema: str | type) -> Iterator[Any]:
    """Lazily yield validated records from a JSONL file.

    Malformed lines and invariant violations raise RecordError with the
    1-based line number attached. Whitespace-only lines are skipped.
    """
    cls = _resolve_schema(schema)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip() == "":
                continue
            try:
                payload = parse_json_line(line)
            except RecordError as exc:
                raise RecordError(exc.raw_message, field=exc.field, line=lineno) from exc
            except json.JSONDecodeError as exc:
                raise RecordError(f"malformed JSON: {exc.msg}", line=lineno) from exc
            try:
                yield cls.from_dict(payload)
            except RecordError as exc:
                raise RecordError(exc.raw_message, field=exc.field, line=lineno) from exc


def write_records(path: str | Path, records: Iterable[Any]) -> int:
    """Write records as canonical JSONL; returns the count written."""
    count = 0
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            payload = record.to_dict() if hasattr(record, "to_dict") else record
            fh.write(canonical_json(payload) + "\n")
            count += 1
    return count


class RecordWriter:
    """Incremental writer used by the CLI so partial outputs survive failures."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if self.path.parent != Path(""):
            self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")
        self.count = 0

    def write(self, record: Any) -> None:
        payload = record.to_dict() if hasattr(record, "to_dict") else record
        self._fh.write(canonical_json(payload) + "\n")
        self._fh.flush()
        self.count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordWriter":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()
