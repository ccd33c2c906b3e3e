"""Per-benchmark import adapters.

Benchmark releases differ in on-disk layout; each adapter normalizes one
family of layouts into the common EvalItem schema so the evaluation core
stays single-purpose. Adapters take one parsed JSON row and return an
EvalItem.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Iterator

from .records import OPTION_LABELS, EvalItem, RecordError, parse_json_line


class ImportError_(ValueError):
    pass


def _labeled_options(raw: dict | list) -> dict[str, str]:
    if isinstance(raw, dict):
        return {str(k): str(v) for k, v in raw.items()}
    return {OPTION_LABELS[i]: str(v) for i, v in enumerate(raw)}


def from_exam_mcq(row: dict, benchmark: str, ident: str) -> EvalItem:
    """Exam-bank style: question + lettered options + an answer that is
    either a label ("C"), an option index, or the option text."""
    options = _labeled_options(row.get("options", {}))
    answer = row.get("answer", row.get("answer_idx"))
    if isinstance(answer, bool) or answer is None:
        raise ImportError_("row has no usable answer")
    if isinstance(answer, int):
        labels = list(options)
        if not 0 <= answer < len(labels):
            raise ImportError_(f"answer index {answer} out of range")
        correct = labels[answer]
    elif answer in options:
        correct = str(answer)
    else:
        matches = [label for label, text in options.items() if text == answer]
        if len(matches) != 1:
            raise ImportError_(f"answer {answer!r} does not name an option")
        correct = matches[0]
    return EvalItem(
        id=ident,
        benchmark=benchmark,
        stem=str(row.get("question", "")),
        options=options,
        correct_label=correct,
    )


def from_choices_list(row: dict, benchmark: str, ident: str) -> EvalItem:
    """MMLU-style: question + "choices" list + integer answer index."""
    choices = row.get("choices", [])
    answer = row.get("answer")
    if not isinstance(answer, int) or isinstance(answer, bool):
        raise ImportError_("choices-list rows need an integer answer index")
    if not 0 <= answer < len(choices):
        raise ImportError_(f"answer index {answer} out of range")
    options = _labeled_options(choices)
    return EvalItem(
        id=ident,
        benchmark=benchmark,
        stem=str(row.get("question", "")),
        options=options,
        correct_label=list(options)[answer],
    )


def from_labeled_decision(row: dict, benchmark: str, ident: str) -> EvalItem:
    """Literature-QA style: a question (optionally with context) keyed by a
    categorical decision, canonically yes/no/maybe."""
    decision = str(row.get("final_decision", row.get("answer", ""))).strip().casefold()
    categories = ["yes", "no", "maybe"]
    if decision not in categories:
        raise ImportError_(f"unknown decision {decision!r}")
    context = str(row.get("context", "")).strip()
    stem = str(row.get("question", ""))
    if context:
        stem = f"{context}\n\n{stem}"
    options = {OPTION_LABELS[i]: c for i, c in enumerate(categories)}
    return EvalItem(
        id=ident,
        benchmark=benchmark,
        stem=stem,
        options=options,
        correct_label=OPTION_LABELS[categories.index(decision)],
    )


ADAPTERS: dict[str, Callable[[dict, str, str], EvalItem]] = {
    "exam-mcq": from_exam_mcq,
    "choices-list": from_choices_list,
    "labeled-decision": from_labeled_decision,
}


def import_items(path: str | Path, fmt: str, benchmark: str) -> Iterator[EvalItem]:
    """Stream a raw benchmark JSONL file through the named adapter."""
    if fmt not in ADAPTERS:
        raise ImportError_(f"unknown import format {fmt!r}; known: {sorted(ADAPTERS)}")
    adapter = ADAPTERS[fmt]
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip() == "":
                continue
            try:
                row = parse_json_line(line)
                yield adapter(row, benchmark, row.get("id") or f"{benchmark}-{lineno:06d}")
            except (ImportError_, RecordError) as exc:
                message = exc.raw_message if isinstance(exc, RecordError) else str(exc)
                raise RecordError(message, line=lineno) from exc
