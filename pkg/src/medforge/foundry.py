"""Benchmark item construction from consultation dialogues.

Pipeline: regex de-identification -> chief-complaint near-duplicate removal
-> EMR extraction (backend) -> vignette question formulation (backend) ->
21-option expansion against a disease vocabulary, with "None of the above"
fixed as the final choice.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import Gateway
from .records import (
    NONE_OF_THE_ABOVE,
    DialogueRecord,
    Emr,
    FoundryItem,
    ReviewState,
)

DEFAULT_TAU = 0.8

_PLACEHOLDER_RE = re.compile(r"^\[[A-Z_]+\]$")


class FoundryError(ValueError):
    pass


@dataclass(frozen=True)
class DeidRule:
    name: str
    pattern: str
    replacement: str

    def __post_init__(self) -> None:
        if not _PLACEHOLDER_RE.match(self.replacement):
            raise FoundryError(f"replacement must look like [NAME], got {self.replacement!r}")
        try:
            re.compile(self.pattern)
        except re.error as exc:
            raise FoundryError(f"rule {self.name!r} pattern does not compile: {exc}") from exc

    @property
    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern)

    @classmethod
    def from_dict(cls, d: dict) -> "DeidRule":
        return cls(name=d.get("name", ""), pattern=d.get("pattern", ""), replacement=d.get("replacement", ""))


DEFAULT_DEID_RULES = (
    DeidRule(
        name="person-name",
        pattern=r"\b(?:Zhang|Wang|Li|Chen|Liu|Yang|Huang|Zhao|Wu|Zhou)\s+[A-Z][a-z]+\b",
        replacement="[NAME]",
    ),
    DeidRule(
        name="institution",
        pattern=r"\b[A-Z][A-Za-z]*(?:\s+[A-Z][A-Za-z]*)*\s+(?:Hospital|Clinic|Medical Center)\b",
        replacement="[INSTITUTION]",
    ),
    DeidRule(
        name="location",
        pattern=r"\b(?:Beijing|Shanghai|Guangzhou|Shenzhen|Chengdu|Hangzhou)\b",
        replacement="[LOCATION]",
    ),
)


def deidentify(text: str, rules: tuple[DeidRule, ...] = DEFAULT_DEID_RULES) -> str:
    """Apply every rule globally, in declared order. Idempotent as long as
    no rule matches a placeholder, which the bracket alphabet guarantees
    for the shipped rules."""
    for rule in rules:
        text = rule.compiled.sub(rule.replacement, text)
    return text


def rule_match_count(text: str, rules: tuple[DeidRule, ...] = DEFAULT_DEID_RULES) -> int:
    return sum(len(rule.compiled.findall(text)) for rule in rules)


def deidentify_dialogue(dialogue: DialogueRecord, rules: tuple[DeidRule, ...] = DEFAULT_DEID_RULES) -> DialogueRecord:
    return DialogueRecord(
        id=dialogue.id,
        department=deidentify(dialogue.department, rules),
        patient=dict(dialogue.patient),
        turns=[{"speaker": t["speaker"], "text": deidentify(t["text"], rules)} for t in dialogue.turns],
    )


# -- chief-complaint dedup -----------------------------------------------------

_WORD_RE = re.compile(r"[a-z0-9]+")


def _word_set(text: str) -> frozenset[str]:
    return frozenset(_WORD_RE.findall(text.casefold()))


def jaccard(a: str, b: str) -> float:
    wa, wb = _word_set(a), _word_set(b)
    if not wa and not wb:
        return 1.0
    union = wa | wb
    return len(wa & wb) / len(union)


def chief_complaint(dialogue: DialogueRecord) -> str:
    for turn in dialogue.turns:
        if turn["speaker"] == "patient":
            return turn["text"]
    return ""


def dedup_complaints(
    records: list[DialogueRecord],
    tau: float = DEFAULT_TAU,
    similarity=jaccard,
) -> tuple[list[DialogueRecord], list[dict]]:
    """Greedy scan in id order; drop anything >= tau similar to a kept record.

    similarity is pluggable (an embedding cosine fits the same signature).
    Returns (kept, drop_log); the two exactly partition the input.
    """
    if not 0 < tau <= 1:
        raise FoundryError(f"tau must be in (0, 1], got {tau}")
    kept: list[DialogueRecord] = []
    dropped: list[dict] = []
    for record in sorted(records, key=lambda r: r.id):
        complaint = chief_complaint(record)
        hit = None
        for other in kept:
            sim = similarity(complaint, chief_complaint(other))
            if sim >= tau:
                hit = {"id": record.id, "matched_id": other.id, "similarity": round(sim, 6)}
                break
        if hit is None:
            kept.append(record)
        else:
            dropped.append(hit)
    return kept, dropped


# -- EMR + question generation --------------------------------------------------


@dataclass(frozen=True)
class DialogueRejection:
    dialogue_id: str
    stage: str
    reason: str

    def to_dict(self) -> dict:
        return {"dialogue_id": self.dialogue_id, "stage": self.stage, "reason": self.reason}


def dialogue_transcript(dialogue: DialogueRecord) -> str:
    return "\n".join(f"{t['speaker']}: {t['text']}" for t in dialogue.turns)


_EMR_LABELS = {
    "chief complaint": "chief_complaint",
    "present illness": "present_illness",
    "past history": "past_history",
    "allergy history": "allergy_history",
    "exams": "exams",
    "diagnosis": "diagnosis",
}


def parse_emr_reply(reply: str) -> dict:
    fields: dict = {}
    for line in reply.splitlines():
        if ":" not in line:
            continue
        label, value = line.split(":", 1)
        key = _EMR_LABELS.get(label.strip().casefold())
        if key is None:
            continue
        value = value.strip()
        if key == "exams":
            fields[key] = [e.strip() for e in value.split(";") if e.strip()]
        else:
            fields[key] = value
    return fields


def generate_emr(
    gateway: Gateway,
    backend_id: str,
    dialogue: DialogueRecord,
    rules: tuple[DeidRule, ...] = DEFAULT_DEID_RULES,
) -> Emr | DialogueRejection:
    """One extraction call; the dialogue must already be de-identified so no
    sensitive text ever reaches a prompt."""
    transcript = dialogue_transcript(dialogue)
    if rule_match_count(transcript, rules):
        raise FoundryError(f"dialogue {dialogue.id} still matches a de-identification rule")
    reply = gateway.ask(backend_id, gateway.render("emr_extract", dialogue=transcript))
    fields = parse_emr_reply(reply)
    if not fields.get("chief_complaint", "").strip() or fields.get("chief_complaint") == "not reported":
        return DialogueRejection(dialogue.id, "emr", "missing chief complaint")
    if not fields.get("diagnosis", "").strip() or fields.get("diagnosis") == "not reported":
        return DialogueRejection(dialogue.id, "emr", "missing diagnosis")
    return Emr(
        chief_complaint=fields["chief_complaint"],
        present_illness=fields.get("present_illness", "not reported"),
        past_history=fields.get("past_history", "not reported"),
        allergy_history=fields.get("allergy_history", "not reported"),
        exams=fields.get("exams", []),
        diagnosis=fields["diagnosis"],
    )


def formulate_question(gateway: Gateway, backend_id: str, emr: Emr, dialogue_id: str) -> tuple[str, str] | DialogueRejection:
    """Vignette question whose keyed answer is the EMR diagnosis."""
    if emr.diagnosis.strip() == "":
        raise FoundryError("EMR has no diagnosis")
    emr_text = "\n".join(
        [
            f"Chief Complaint: {emr.chief_complaint}",
            f"Present Illness: {emr.present_illness}",
            f"Past History: {emr.past_history}",
            f"Allergy History: {emr.allergy_history}",
            f"Exams: {'; '.join(emr.exams)}",
        ]
    )
    question = gateway.ask(backend_id, gateway.render("question_formulate", emr=emr_text)).strip()
    if not question:
        return DialogueRejection(dialogue_id, "question", "empty question")
    return question, emr.diagnosis


# -- 21-option expansion ---------------------------------------------------------


def load_vocabulary(path: str | Path) -> list[str]:
    terms = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        term = line.strip()
        if term:
            terms.append(term)
    return terms


def expand_options(
    answer: str, pool: list[str], vocabulary: list[str], rng_seed: int, key_nota: bool = False
) -> tuple[list[str], int]:
    """21 options: the answer, 19 vocabulary distractors, and the fixed
    "None of the above" at index 20; the 20 diagnostic slots are shuffled
    deterministically by rng_seed.

    Pool entries that duplicate the answer, repeat an earlier pick, or fall
    outside the vocabulary are skipped in favor of the next entry. With
    key_nota the true diagnosis is withheld entirely and "None of the
    above" (index 20) becomes the keyed answer.
    """
    vocab = set(vocabulary)
    if answer not in vocab:
        raise FoundryError(f"answer {answer!r} is not in the vocabulary")
    if len(pool) < 20:
        raise FoundryError(f"distractor pool too small: {len(pool)} < 20")
    want = 20 if key_nota else 19
    distractors: list[str] = []
    for entry in pool:
        if len(distractors) == want:
            break
        if entry == answer or entry in distractors or entry not in vocab:
            continue
        distractors.append(entry)
    if len(distractors) < want:
        raise FoundryError(f"distractor pool too small: only {len(distractors)} usable entries")
    diagnostic = distractors if key_nota else [answer] + distractors
    rng = random.Random(rng_seed)
    rng.shuffle(diagnostic)
    options = diagnostic + [NONE_OF_THE_ABOVE]
    return options, 20 if key_nota else diagnostic.index(answer)


# -- demographics ---------------------------------------------------------------

AGE_BUCKETS = ((0, 20), (21, 40), (41, 60), (61, 90))


def _pct(count: int, total: int) -> float:
    return round(100.0 * count / total, 2) if total else 0.0


def compute_stats(items: list) -> dict:
    """Gender ratio, age-bucket histogram, and department histogram with
    exact counts and 2-decimal percentages. Accepts FoundryItems or
    DialogueRecords (anything with .department and .patient)."""
    total = len(items)
    genders = {"male": 0, "female": 0}
    buckets = {f"{lo}-{hi}": 0 for lo, hi in AGE_BUCKETS}
    departments: dict[str, int] = {}
    counted = 0
    for item in items:
        patient = getattr(item, "patient", None)
        department = getattr(item, "department", None)
        if department:
            departments[department] = departments.get(department, 0) + 1
        if not patient:
            continue
        counted += 1
        gender = patient.get("gender")
        if gender in genders:
            genders[gender] += 1
        age = patient.get("age", -1)
        for lo, hi in AGE_BUCKETS:
            if lo <= age <= hi:
                buckets[f"{lo}-{hi}"] += 1
                break
    return {
        "n": total,
        "n_with_patient": counted,
        "gender": {g: {"count": c, "pct": _pct(c, counted)} for g, c in genders.items()},
        "age_buckets": {b: {"count": c, "pct": _pct(c, counted)} for b, c in buckets.items()},
        "departments": {d: {"count": c, "pct": _pct(c, total)} for d, c in sorted(departments.items())},
    }


# -- full build -------------------------------------------------------------------


@dataclass
class BuildOutcome:
    items: list[FoundryItem] = field(default_factory=list)
    dropped_duplicates: list[dict] = field(default_factory=list)
    rejections: list[DialogueRejection] = field(default_factory=list)


def build_items(
    gateway: Gateway,
    emr_backend_id: str,
    question_backend_id: str,
    dialogues: list[DialogueRecord],
    vocabulary: list[str],
    tau: float = DEFAULT_TAU,
    rng_seed: int = 0,
    rules: tuple[DeidRule, ...] = DEFAULT_DEID_RULES,
    pool: list[str] | None = None,
    key_nota: bool = False,
) -> BuildOutcome:
    """dialogues -> FoundryItems. The distractor pool defaults to the
    vocabulary in a per-item seeded order so item options vary but the whole
    build replays byte-identically under one rng_seed."""
    out = BuildOutcome()
    clean = [deidentify_dialogue(d, rules) for d in dialogues]
    kept, out.dropped_duplicates = dedup_complaints(clean, tau=tau)
    for position, dialogue in enumerate(kept):
        emr = generate_emr(gateway, emr_backend_id, dialogue, rules=rules)
        if isinstance(emr, DialogueRejection):
            out.rejections.append(emr)
            continue
        formulated = formulate_question(gateway, question_backend_id, emr, dialogue.id)
        if isinstance(formulated, DialogueRejection):
            out.rejections.append(formulated)
            continue
        question, answer = formulated
        item_seed = rng_seed * 1_000_003 + position
        item_pool = pool
        if item_pool is None:
            item_pool = [term for term in vocabulary if term != answer]
            random.Random(item_seed).shuffle(item_pool)
        try:
            options, answer_index = expand_options(
                answer, item_pool, vocabulary, rng_seed=item_seed, key_nota=key_nota
            )
        except FoundryError as exc:
            out.rejections.append(DialogueRejection(dialogue.id, "options", str(exc)))
            continue
        out.items.append(
            FoundryItem(
                id=dialogue.id,
                department=dialogue.department,
                emr=emr,
                question=question,
                options=options,
                answer_index=answer_index,
                review=ReviewState.initial(),
                patient=dict(dialogue.patient),
            )
        )
    return out
