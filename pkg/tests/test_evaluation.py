from __future__ import annotations

import random

import pytest

from medforge.evaluation import EvalError, EvalResult, evaluate, extract_choice, render_report
from medforge.gateway import BackendConfig, Gateway
from medforge.records import EvalItem

ITEM = EvalItem(
    id="q1",
    benchmark="medqa",
    stem="A patient presents with a productive cough and fever. Most likely diagnosis?",
    options={"A": "Asthma", "B": "Tuberculosis", "C": "Pneumonia", "D": "Bronchitis"},
    correct_label="C",
)


def test_extract_choice_answer_block_text_match():
    assert extract_choice("<answer>Pneumonia</answer>", ITEM) == "C"


def test_extract_choice_bare_label_fallbacks():
    assert extract_choice("B. because of the chronic history", ITEM) == "B"
    assert extract_choice("(C)", ITEM) == "C"
    assert extract_choice("C.", ITEM) == "C"
    assert extract_choice("C", ITEM) == "C"


def test_extract_choice_free_text_is_none():
    assert extract_choice("The presentation is complex and unclear.", ITEM) is None


def test_extract_choice_does_not_misread_leading_words():
    assert extract_choice("Because of the wheeze I would say asthma", ITEM) is None
    assert extract_choice("A patient this young is atypical", ITEM) is None


def test_extract_choice_label_inside_answer_block():
    assert extract_choice("<answer>C</answer>", ITEM) == "C"


def test_extract_choice_label_outside_options():
    item = EvalItem(id="q", benchmark="b", stem="s", options={"A": "x", "B": "y"}, correct_label="A")
    assert extract_choice("D. something", item) is None


def items_with_answers(n, benchmark="medqa"):
    rng = random.Random(3)
    items = []
    for i in range(n):
        labels = ["A", "B", "C", "D"]
        texts = [f"disease {i}-{l}" for l in labels]
        correct = rng.choice(labels)
        items.append(
            EvalItem(
                id=f"{benchmark}-{i:04d}",
                benchmark=benchmark,
                stem=f"Question {i}: which disease fits?",
                options=dict(zip(labels, texts)),
                correct_label=correct,
            )
        )
    return items


def scripted_eval(items, n_correct):
    """Backend answering the gold text for the first n_correct items and an
    unmappable string afterwards."""
    script = []
    for i, item in enumerate(items):
        if i < n_correct:
            script.append(f"<answer>{item.options[item.correct_label]}</answer>")
        else:
            script.append("I cannot commit to an option here.")
    gw = Gateway()
    gw.register(BackendConfig(id="model", kind="mock", script=script))
    return gw


def test_evaluate_accuracy_exact():
    items = items_with_answers(1000)
    gw = scripted_eval(items, 887)
    result = evaluate(gw, "model", items)
    assert result.n_correct == 887
    assert result.accuracy == pytest.approx(0.8870, abs=0)
    assert round(result.accuracy, 4) == 0.8870


def test_evaluate_unmappable_scores_zero():
    items = items_with_answers(10)
    gw = scripted_eval(items, 0)
    assert evaluate(gw, "model", items).accuracy == 0.0


def test_evaluate_empty_items_is_precondition_error():
    gw = scripted_eval([], 0)
    with pytest.raises(EvalError):
        evaluate(gw, "model", [])


def test_evaluate_backend_failure_counts_incorrect_and_continues():
    items = items_with_answers(3)
    script = [f"<answer>{items[0].options[items[0].correct_label]}</answer>"]  # then exhausted
    gw = Gateway()
    gw.register(BackendConfig(id="model", kind="mock", script=script))
    result = evaluate(gw, "model", items)
    assert result.n_items == 3
    assert result.n_correct == 1
    assert result.per_item[1]["error"]
    assert result.per_item[1]["correct"] is False


def test_accuracy_recomputable_from_log():
    items = items_with_answers(50)
    gw = scripted_eval(items, 31)
    result = evaluate(gw, "model", items)
    assert result.accuracy == sum(e["correct"] for e in result.per_item) / len(result.per_item)


def test_shuffling_items_preserves_accuracy():
    items = items_with_answers(40)
    gw = scripted_eval(items, 25)
    base = evaluate(gw, "model", items).accuracy

    shuffled = list(items)
    random.Random(7).shuffle(shuffled)
    script = []
    for item in shuffled:
        rank = items.index(item)
        if rank < 25:
            script.append(f"<answer>{item.options[item.correct_label]}</answer>")
        else:
            script.append("pass")
    gw2 = Gateway()
    gw2.register(BackendConfig(id="model", kind="mock", script=script))
    assert evaluate(gw2, "model", shuffled).accuracy == base


# -- report rendering ------------------------------------------------------------


def result(model, benchmark, accuracy):
    n = 10000
    correct = round(accuracy * n)
    return EvalResult(
        benchmark=benchmark, model_id=model, n_items=n, n_correct=correct, accuracy=accuracy, per_item=[]
    )


def test_report_bold_and_underline():
    grid = [
        result("medreason-70b", "medqa", 0.8892),
        result("llama-70b", "medqa", 0.7722),
        result("distill-70b", "medqa", 0.8696),
    ]
    table = render_report(grid)
    assert "**0.8892**" in table
    assert "<u>0.8696</u>" in table
    assert "0.7722" in table and "**0.7722**" not in table


def test_report_single_model_bold_no_underline():
    table = render_report([result("only", "medqa", 0.5)])
    assert "**0.5000**" in table
    assert "<u>" not in table


def test_report_tie_for_best_bolds_both_no_underline():
    grid = [
        result("m1", "medqa", 0.9),
        result("m2", "medqa", 0.9),
        result("m3", "medqa", 0.8),
    ]
    table = render_report(grid)
    assert table.count("**0.9000**") == 2
    assert "<u>" not in table


def test_report_missing_cells_dash():
    grid = [result("m1", "medqa", 0.9), result("m2", "pubmedqa", 0.7)]
    table = render_report(grid)
    lines = table.strip().splitlines()
    assert lines[0] == "| Model | medqa | pubmedqa |"
    assert "| m1 | **0.9000** | - |" in table
    assert "| m2 | - | **0.7000** |" in table


def test_report_is_pure():
    grid = [result("m1", "medqa", 0.9), result("m2", "medqa", 0.7)]
    assert render_report(grid) == render_report(grid)
