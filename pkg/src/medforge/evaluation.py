"""MCQ evaluation harness: run a backend over benchmark items, map answers
to labels, compute exact accuracy, and render a per-benchmark report table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .gateway import Gateway, GatewayError, TagParseError, parse_tagged
from .preference import match_option_text
from .records import EvalItem, QuestionSeed


class EvalError(ValueError):
    pass


# "(C)" | "C." / "C:" / "C)" + space or end | a lone "C" — a bare letter
# followed by plain words (e.g. "A patient ...") is not a choice
_LEADING_LABEL_RE = re.compile(r"^\s*(?:\(([A-U])\)|([A-U])[\.\):](?:\s|$)|([A-U])\s*$)")


def _as_seed_view(item: EvalItem) -> QuestionSeed:
    # match_option_text only touches .options / .correct_label
    return QuestionSeed(
        id=item.id,
        source="eval",
        stem=item.stem,
        options=item.options,
        correct_label=item.correct_label,
        ground_truth="-",
    )


def extract_choice(output: str, item: EvalItem) -> str | None:
    """Label for a model output, or None (scored incorrect).

    An <answer> block is matched against option texts first, then given a
    leading-label parse; tag-free outputs only get the leading-label parse.
    """
    seed_view = _as_seed_view(item)
    try:
        inner = parse_tagged(output, "answer")
    except TagParseError:
        inner = None
    if inner is not None:
        label = match_option_text(inner, seed_view)
        if label is not None:
            return label
        return _leading_label(inner, item)
    return _leading_label(output, item)


def _leading_label(text: str, item: EvalItem) -> str | None:
    m = _LEADING_LABEL_RE.match(text)
    if not m:
        return None
    label = next(g for g in m.groups() if g)
    return label if label in item.options else None


@dataclass(frozen=True)
class EvalResult:
    benchmark: str
    model_id: str
    n_items: int
    n_correct: int
    accuracy: float
    per_item: list[dict]

    def __post_init__(self) -> None:
        if not 0 <= self.n_correct <= self.n_items:
            raise EvalError("n_correct must be within [0, n_items]")
        if not 0.0 <= self.accuracy <= 1.0:
            raise EvalError("accuracy must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "model_id": self.model_id,
            "n_items": self.n_items,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "per_item": list(self.per_item),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalResult":
        return cls(
            benchmark=d.get("benchmark", ""),
            model_id=d.get("model_id", ""),
            n_items=d.get("n_items", 0),
            n_correct=d.get("n_correct", 0),
            accuracy=d.get("accuracy", 0.0),
            per_item=d.get("per_item", []),
        )


def evaluate(gateway: Gateway, backend_id: str, items: list[EvalItem]) -> EvalResult:
    """One completion per item; backend failures count the item incorrect
    and keep the run going."""
    if not items:
        raise EvalError("items must be nonempty")
    per_item = []
    n_correct = 0
    benchmark = items[0].benchmark
    for item in items:
        prompt = gateway.render(
            "mcq_eval",
            stem=item.stem,
            options="\n".join(f"{label}. {text}" for label, text in item.options.items()),
        )
        entry: dict = {"item_id": item.id, "correct_label": item.correct_label}
        try:
            output = gateway.ask(backend_id, prompt)
        except GatewayError as exc:
            entry.update({"choice": None, "correct": False, "error": str(exc)})
            per_item.append(entry)
            continue
        choice = extract_choice(output, item)
        correct = choice == item.correct_label
        n_correct += int(correct)
        entry.update({"choice": choice, "correct": correct})
        per_item.append(entry)
    return EvalResult(
        benchmark=benchmark,
        model_id=backend_id,
        n_items=len(items),
        n_correct=n_correct,
        accuracy=n_correct / len(items),
        per_item=per_item,
    )


def render_report(results: list[EvalResult]) -> str:
    """Markdown grid: one row per model, one column per benchmark, values to
    4 decimals; per column the best value is bold and the second-best
    underlined. A tie for best bolds every leader and drops the underline;
    missing cells render "-"."""
    if not results:
        raise EvalError("need at least one result")
    models: list[str] = []
    benchmarks: list[str] = []
    grid: dict[tuple[str, str], float] = {}
    for r in results:
        if r.model_id not in models:
            models.append(r.model_id)
        if r.benchmark not in benchmarks:
            benchmarks.append(r.benchmark)
        grid[(r.model_id, r.benchmark)] = r.accuracy

    def decorate(value: float, column: list[float]) -> str:
        text = f"{value:.4f}"
        best = max(column)
        if value == best:
            return f"**{text}**"
        if column.count(best) == 1:
            below = [v for v in column if v != best]
            if below and value == max(below):
                return f"<u>{text}</u>"
        return text

    lines = ["| Model | " + " | ".join(benchmarks) + " |", "| --- |" + " --- |" * len(benchmarks)]
    columns = {b: [grid[(m, b)] for m in models if (m, b) in grid] for b in benchmarks}
    for model in models:
        cells = []
        for bench in benchmarks:
            if (model, bench) in grid:
                cells.append(decorate(grid[(model, bench)], columns[bench]))
            else:
                cells.append("-")
        lines.append("| " + model + " | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
