"""The dual-expert cognitive flow loop.

A Reasoning Expert lists known facts, proposes candidate diagnoses, and
builds forward reasoning steps; a Reflection Expert rates each step 0/1
with feedback. Once the reasoning side declares the candidates fully
discussed they are ranked and a diagnosis decision is attempted; failing
that, an external-knowledge request extends the fact list and the loop
restarts, up to configured budgets.

In gt-guided mode the reflection prompts carry the verified answer so the
rater can steer the proposer; the ground-truth text must never reach a
reasoning-side prompt (auditable via the gateway log).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .gateway import (
    Gateway,
    GatewayError,
    InvalidRatingError,
    TagParseError,
    parse_rating,
    parse_tagged,
    reasoning_bindings,
)
from .records import OpenQuestion, QuestionSeed, ReasoningStep, ReasoningTrace


class DegenerateInputError(ValueError):
    """The backend produced an unusable (empty) fact or hypothesis list."""


class LoopProtocolError(RuntimeError):
    """A backend reply stayed unparseable after the single re-ask."""


@dataclass(frozen=True)
class LoopConfig:
    reasoning_backend_id: str
    reflection_backend_id: str
    gt_guided: bool = False
    max_iterations: int = 4
    max_knowledge_requests: int = 2
    steps_per_iteration: int = 8
    requirements: str | None = None  # overrides the built-in step criteria

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.max_knowledge_requests < 0:
            raise ValueError("max_knowledge_requests must be >= 0")
        if self.steps_per_iteration < 1:
            raise ValueError("steps_per_iteration must be >= 1")


# provider(seed, open_question) -> one fact string to append to known facts
KnowledgeProvider = Callable[[QuestionSeed, OpenQuestion | None], str]

_HINT_STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it of on or that the this to was were with".split()
)


def ground_truth_hint(ground_truth: str, limit: int = 12) -> str:
    """Keyword digest of the ground truth.

    Deliberately not the verbatim text: knowledge injections land in
    known_facts and hence in reasoning prompts, which must stay free of the
    ground-truth string in gt-guided runs.
    """
    full = " ".join(ground_truth.split()).casefold()
    words = sorted(
        {w.strip(".,;:!?()").casefold() for w in ground_truth.split()} - _HINT_STOPWORDS - {"", full}
    )
    return "relevant concepts: " + ", ".join(words[:limit])


def default_knowledge_provider(gt_guided: bool) -> KnowledgeProvider:
    def provider(seed: QuestionSeed, open_question: OpenQuestion | None) -> str:
        if gt_guided:
            return ground_truth_hint(seed.ground_truth)
        return "no further information"

    return provider


def call_budget(config: LoopConfig) -> int:
    """Hard upper bound on backend calls one run_loop may make.

    Setup: facts + hypotheses, one re-ask each. Per step: reason (<=2),
    reflect (<=2), discussion probe (<=4: tag re-ask plus one salvage ask).
    Per iteration: the step budget plus ranking and diagnosis, <=2 each.
    """
    per_step = 8
    per_iteration = config.steps_per_iteration * per_step + 4
    return 4 + config.max_iterations * per_iteration


class DualExpertEngine:
    def __init__(self, gateway: Gateway, config: LoopConfig, knowledge_provider: KnowledgeProvider | None = None):
        self.gateway = gateway
        self.config = config
        self.knowledge_provider = knowledge_provider or default_knowledge_provider(config.gt_guided)
        self.calls_made = 0

    # -- low-level ask helpers ----------------------------------------------

    def _ask_reasoning(self, template: str, **extra: str) -> str:
        prompt = self.gateway.render(template, **extra)
        self.calls_made += 1
        return self.gateway.ask(self.config.reasoning_backend_id, prompt)

    def _ask_tagged(self, template: str, tag: str, **extra: str) -> str:
        """One reasoning call parsed from a tag block, with a single re-ask."""
        for attempt in range(2):
            reply = self._ask_reasoning(template, **extra)
            try:
                return parse_tagged(reply, tag)
            except TagParseError:
                if attempt == 1:
                    raise LoopProtocolError(f"no parseable <{tag}> block after re-ask")
        raise AssertionError("unreachable")

    def _question_bindings(self, question: str) -> dict[str, str]:
        return reasoning_bindings(question, self.config.requirements)

    # -- the seven-step loop ------------------------------------------------

    def list_known_facts(self, question: str) -> list[str]:
        if question.strip() == "":
            raise DegenerateInputError("question is empty")
        inner = self._ask_tagged("facts", "Reasoning", **self._question_bindings(question))
        facts = [line.strip() for line in inner.splitlines() if line.strip()]
        if not facts:
            raise DegenerateInputError("backend produced no known facts")
        return facts

    def propose_hypotheses(self, question: str, facts: list[str]) -> list[str]:
        if not facts:
            raise DegenerateInputError("facts list is empty")
        inner = self._ask_tagged(
            "hypotheses", "Reasoning", facts="\n".join(facts), **self._question_bindings(question)
        )
        hypotheses: list[str] = []
        seen: set[str] = set()
        for line in inner.splitlines():
            h = line.strip()
            if h and h.casefold() not in seen:
                seen.add(h.casefold())
                hypotheses.append(h)
        if not hypotheses:
            raise DegenerateInputError("backend proposed no hypotheses")
        return hypotheses

    @staticmethod
    def _history_text(steps: list[ReasoningStep]) -> str:
        if not steps:
            return "(none yet)"
        lines = []
        for s in steps:
            lines.append(f"Step {s.index + 1}: {s.content}")
            lines.append(f"  feedback (rating {s.rating}): {s.feedback}")
        return "\n".join(lines)

    def reason_step(self, question: str, facts: list[str], hypotheses: list[str], steps: list[ReasoningStep]) -> str:
        return self._ask_tagged(
            "reason_step",
            "Reasoning",
            facts="\n".join(facts),
            hypotheses="\n".join(hypotheses),
            history=self._history_text(steps),
            **self._question_bindings(question),
        )

    def reflect(self, question: str, ground_truth: str | None, previous_thought: str, step_content: str) -> tuple[str, int]:
        if self.config.gt_guided and not (ground_truth and ground_truth.strip()):
            raise ValueError("gt_guided reflection requires a ground truth")
        if self.config.gt_guided:
            prompt = self.gateway.render(
                "reflection_gt",
                Q=question,
                GT=ground_truth,
                previous_thought=previous_thought,
                reasoning_step=step_content,
            )
        else:
            prompt = self.gateway.render(
                "reflection_plain",
                Q=question,
                previous_thought=previous_thought,
                reasoning_step=step_content,
            )
        for attempt in range(2):
            self.calls_made += 1
            reply = self.gateway.ask(self.config.reflection_backend_id, prompt)
            try:
                feedback = parse_tagged(reply, "Feedback")
                rating = parse_rating(reply)
                return feedback, rating
            except (TagParseError, InvalidRatingError):
                if attempt == 1:
                    raise LoopProtocolError("no valid feedback/rating after re-ask")
        raise AssertionError("unreachable")

    def _discussion_complete(self, question: str, hypotheses: list[str], steps: list[ReasoningStep]) -> bool:
        inner = self._ask_tagged(
            "discussion_probe",
            "Decision",
            hypotheses="\n".join(hypotheses),
            history=self._history_text(steps),
            **self._question_bindings(question),
        )
        word = inner.strip().rstrip(".").casefold()
        if word in ("yes", "no"):
            return word == "yes"
        # an off-script token gets one salvage re-ask via the same path
        inner = self._ask_tagged(
            "discussion_probe",
            "Decision",
            hypotheses="\n".join(hypotheses),
            history=self._history_text(steps),
            **self._question_bindings(question),
        )
        word = inner.strip().rstrip(".").casefold()
        if word in ("yes", "no"):
            return word == "yes"
        raise LoopProtocolError(f"discussion probe answered {word!r} twice")

    def _rank_hypotheses(self, question: str, hypotheses: list[str], steps: list[ReasoningStep]) -> list[str]:
        inner = self._ask_tagged(
            "ranking",
            "Ranking",
            hypotheses="\n".join(hypotheses),
            history=self._history_text(steps),
            **self._question_bindings(question),
        )
        by_fold = {h.casefold(): h for h in hypotheses}
        ranked: list[str] = []
        for line in inner.splitlines():
            key = line.strip().casefold()
            if key in by_fold and by_fold[key] not in ranked:
                ranked.append(by_fold[key])
        for h in hypotheses:  # anything the ranking omitted keeps its order
            if h not in ranked:
                ranked.append(h)
        return ranked

    def _diagnose(self, question: str, hypotheses: list[str], steps: list[ReasoningStep]) -> str | None:
        inner = self._ask_tagged(
            "diagnosis_probe",
            "Diagnosis",
            hypotheses="\n".join(hypotheses),
            history=self._history_text(steps),
            **self._question_bindings(question),
        )
        text = inner.strip()
        if not text or text.casefold() == "none":
            return None
        return text

    def run_loop(self, seed: QuestionSeed, open_question: OpenQuestion | None = None) -> ReasoningTrace:
        """Execute the full loop for one seed and return its trace.

        Exhausted budgets are recorded as terminations, not raised; backend
        failures propagate.
        """
        question = open_question.open_stem if open_question is not None else seed.stem
        ground_truth = seed.ground_truth if self.config.gt_guided else None

        facts = self.list_known_facts(question)
        hypotheses = self.propose_hypotheses(question, facts)

        steps: list[ReasoningStep] = []
        knowledge_used = 0
        iterations = 0
        termination = "budget_exhausted"
        final_answer = ""

        while iterations < self.config.max_iterations:
            iterations += 1
            discussed = False
            for _ in range(self.config.steps_per_iteration):
                content = self.reason_step(question, facts, hypotheses, steps)
                previous = "\n".join(s.content for s in steps) or "(none yet)"
                feedback, rating = self.reflect(question, ground_truth, previous, content)
                steps.append(ReasoningStep(index=len(steps), content=content, feedback=feedback, rating=rating))
                if self._discussion_complete(question, hypotheses, steps):
                    discussed = True
                    break
            if not discussed:
                continue  # endpoints not yet covered: spend another iteration
            hypotheses = self._rank_hypotheses(question, hypotheses, steps)
            diagnosis = self._diagnose(question, hypotheses, steps)
            if diagnosis is not None:
                termination = "diagnosed"
                final_answer = diagnosis
                break
            if knowledge_used < self.config.max_knowledge_requests:
                facts = facts + [self.knowledge_provider(seed, open_question)]
                knowledge_used += 1
                continue
            termination = "knowledge_limit"
            break

        return ReasoningTrace(
            seed_id=seed.id,
            known_facts=facts,
            hypotheses=hypotheses,
            steps=steps,
            final_answer=final_answer,
            termination=termination,
            iterations=iterations,
        )


def run_loop(
    gateway: Gateway,
    seed: QuestionSeed,
    open_question: OpenQuestion | None,
    config: LoopConfig,
    knowledge_provider: KnowledgeProvider | None = None,
) -> ReasoningTrace:
    return DualExpertEngine(gateway, config, knowledge_provider).run_loop(seed, open_question)
