"""Rejection-sampling preference pairs: sample k responses at high
temperature, label good/bad by answer mapping, score with a judge, and keep
one <chosen, rejected> pair per group that has both classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .gateway import CompletionRequest, Gateway, GatewayError, TagParseError, parse_tagged
from .records import PreferenceRecord, QuestionSeed, is_sft_target

DEFAULT_K = 20
DEFAULT_TEMPERATURE = 1.2

_TERMINAL_PUNCT = ".?!,;:"


class PreferenceError(ValueError):
    pass


@dataclass
class SampledResponse:
    index: int
    target: str
    mapped_label: str | None = None
    score: float | None = None
    score_flagged: bool = False


def _normalize(text: str) -> str:
    out = text.casefold().strip()
    while out and out[-1] in _TERMINAL_PUNCT:
        out = out[:-1].rstrip()
    return " ".join(out.split())


def match_option_text(answer_text: str, seed: QuestionSeed) -> str | None:
    """Unique option label whose normalized text equals, contains, or is
    contained in the normalized answer; None when zero or several match."""
    ans = _normalize(answer_text)
    if not ans:
        return None
    candidates = []
    for label, text in seed.options.items():
        opt = _normalize(text)
        if not opt:
            continue
        if ans == opt or opt in ans or ans in opt:
            candidates.append(label)
    if len(candidates) == 1:
        return candidates[0]
    return None


def map_answer(response_text: str, seed: QuestionSeed) -> str | None:
    """Map a response's <answer> block onto an option label, or None."""
    try:
        inner = parse_tagged(response_text, "answer")
    except TagParseError:
        return None
    return match_option_text(inner, seed)


def sample_k(
    gateway: Gateway,
    backend_id: str,
    open_input: str,
    k: int = DEFAULT_K,
    temperature: float = DEFAULT_TEMPERATURE,
    seed: int | None = None,
) -> tuple[list[SampledResponse], list[dict]]:
    """Make exactly k completion calls; failed calls become warning records.

    Returns (responses, warnings). Fewer than 2 usable responses means the
    caller should skip the group. When a seed is given, call i carries
    seed+i so seed-honoring backends replay deterministically.
    """
    if k < 2:
        raise PreferenceError(f"k must be >= 2, got {k}")
    responses: list[SampledResponse] = []
    warnings: list[dict] = []
    for i in range(k):
        try:
            text = gateway.complete(
                CompletionRequest(
                    backend_id=backend_id,
                    prompt=open_input,
                    temperature=temperature,
                    seed=None if seed is None else seed + i,
                )
            )
        except GatewayError as exc:
            warnings.append({"index": i, "error": str(exc)})
            continue
        responses.append(SampledResponse(index=i, target=text))
    return responses, warnings


def score_response(gateway: Gateway, judge_backend_id: str, open_input: str, response: SampledResponse) -> tuple[float, bool]:
    """Judge score in [0, 10]; one re-ask on an unparseable/out-of-range
    value, then 0.0 with the flag set."""
    prompt = gateway.render("judge_score", question=open_input, response=response.target)
    for attempt in range(2):
        reply = gateway.ask(judge_backend_id, prompt)
        try:
            value = float(parse_tagged(reply, "Score"))
        except (TagParseError, ValueError):
            continue
        if 0.0 <= value <= 10.0:
            return value, False
    return 0.0, True


def classify(responses: Iterable[SampledResponse], seed: QuestionSeed) -> tuple[list[SampledResponse], list[SampledResponse]]:
    """Split into (good, bad); unmapped responses belong to neither pool."""
    good, bad = [], []
    for r in responses:
        if r.mapped_label is None:
            continue
        (good if r.mapped_label == seed.correct_label else bad).append(r)
    return good, bad


def build_pair(seed: QuestionSeed, responses: list[SampledResponse], open_input: str) -> PreferenceRecord | None:
    """Selection per the rejection-sampling rules.

    chosen = highest-scoring good response; rejected = lowest-scoring bad
    response restricted to the modal incorrect label. Ties break toward the
    lowest response index (for tied modal labels: the label whose earliest
    response comes first). Groups lacking either class yield None.
    """
    for r in responses:
        if r.score is None:
            raise PreferenceError(f"response {r.index} has no score")
    ordered = sorted(responses, key=lambda r: r.index)
    good, bad = classify(ordered, seed)
    if not good or not bad:
        return None

    chosen = max(good, key=lambda r: (r.score, -r.index))

    counts: dict[str, int] = {}
    first_index: dict[str, int] = {}
    for r in bad:
        counts[r.mapped_label] = counts.get(r.mapped_label, 0) + 1
        first_index.setdefault(r.mapped_label, r.index)
    top = max(counts.values())
    modal_label = min((lab for lab, c in counts.items() if c == top), key=lambda lab: first_index[lab])
    pool = [r for r in bad if r.mapped_label == modal_label]
    rejected = min(pool, key=lambda r: (r.score, r.index))

    return PreferenceRecord(
        input=open_input,
        chosen=chosen.target,
        rejected=rejected.target,
        meta={
            "chosen_score": chosen.score,
            "rejected_score": rejected.score,
            "chosen_label": chosen.mapped_label,
            "rejected_label": rejected.mapped_label,
            "correct_label": seed.correct_label,
        },
    )


@dataclass
class GroupOutcome:
    seed_id: str
    record: PreferenceRecord | None
    skipped_reason: str = ""
    warnings: list[dict] = field(default_factory=list)


def build_group(
    gateway: Gateway,
    seed: QuestionSeed,
    open_input: str,
    sampler_backend_id: str,
    judge_backend_id: str,
    k: int = DEFAULT_K,
    temperature: float = DEFAULT_TEMPERATURE,
    seed_value: int | None = None,
) -> GroupOutcome:
    """Full per-seed pipeline: sample, map, score, select."""
    responses, warnings = sample_k(
        gateway, sampler_backend_id, open_input, k=k, temperature=temperature, seed=seed_value
    )
    if len(responses) < 2:
        return GroupOutcome(seed.id, None, skipped_reason="fewer than 2 usable responses", warnings=warnings)
    for r in responses:
        # format failures stay out of both pools: a response that does not
        # even match the target grammar must not become preference signal
        r.mapped_label = map_answer(r.target, seed) if is_sft_target(r.target) else None
        r.score, r.score_flagged = score_response(gateway, judge_backend_id, open_input, r)
    record = build_pair(seed, responses, open_input)
    reason = "" if record is not None else "group lacks a good or a bad response"
    return GroupOutcome(seed.id, record, skipped_reason=reason, warnings=warnings)
