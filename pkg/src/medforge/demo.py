"""Deterministic synthetic inputs and mock-backend scripts.

Everything here is seeded: the same seed value reproduces the same seeds,
dialogues, loop plans, and scripted replies byte for byte. Tests, the
acceptance suite, and the runnable demo scripts all build their fixtures
through this module so mock scripts always line up with the exact call
sequence the pipeline makes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .dual_expert import LoopConfig
from .records import DialogueRecord, QuestionSeed

DIAGNOSES = [
    "Community-acquired pneumonia",
    "Acute bronchitis",
    "Pulmonary tuberculosis",
    "Bronchial asthma",
    "Chronic obstructive pulmonary disease",
    "Acute upper respiratory infection",
    "Influenza",
    "Acute pharyngitis",
    "Acute tonsillitis",
    "Allergic rhinitis",
    "Acute sinusitis",
    "Acute otitis media",
    "Gastroesophageal reflux disease",
    "Acute gastroenteritis",
    "Peptic ulcer",
    "Irritable bowel syndrome",
    "Acute appendicitis",
    "Cholecystitis",
    "Viral hepatitis",
    "Urinary tract infection",
    "Acute pyelonephritis",
    "Nephrolithiasis",
    "Essential hypertension",
    "Type 2 diabetes mellitus",
    "Hyperthyroidism",
    "Hypothyroidism",
    "Iron deficiency anemia",
    "Migraine",
    "Tension-type headache",
    "Trigeminal neuralgia",
    "Lumbar disc herniation",
    "Cervical spondylosis",
    "Osteoarthritis of the knee",
    "Rheumatoid arthritis",
    "Gouty arthritis",
    "Atopic dermatitis",
    "Contact dermatitis",
    "Psoriasis vulgaris",
    "Urticaria",
    "Herpes zoster",
    "Conjunctivitis",
    "Dry eye syndrome",
    "Angina pectoris",
    "Atrial fibrillation",
    "Heart failure",
    "Deep vein thrombosis",
    "Varicose veins of lower extremities",
    "Anxiety disorder",
    "Depressive episode",
    "Insomnia disorder",
]

SYMPTOM_SETS = [
    "fever for three days with productive cough",
    "crushing chest pain radiating to the left arm",
    "episodic wheezing worse at night",
    "burning epigastric pain after meals",
    "frequent urination with burning sensation",
    "throbbing unilateral headache with photophobia",
    "itchy erythematous rash on both forearms",
    "progressive exertional dyspnea",
    "watery diarrhea and vomiting since yesterday",
    "lower back pain radiating to the right leg",
]

DEPARTMENTS = [
    "respiratory medicine",
    "cardiology",
    "gastroenterology",
    "neurology",
    "dermatology",
    "endocrinology",
    "urology",
    "orthopedics",
    "psychiatry",
    "ophthalmology",
]

# de-identifiable decorations for dialogue turns; the shipped rules match these
_NAMES = ["Zhang San", "Li Ming", "Wang Fang", "Chen Wei", "Liu Yang"]
_INSTITUTIONS = ["Beijing Hospital", "Chaoyang Medical Center", "Xinhua Clinic"]
_LOCATIONS = ["Beijing", "Shanghai", "Chengdu"]

_SYMPTOM_WORDS = (
    "fever cough wheeze headache dizziness nausea vomiting diarrhea fatigue insomnia "
    "palpitations dyspnea rash itching swelling stiffness numbness tingling cramping bloating "
    "heartburn constipation chills sweating hoarseness sneezing congestion earache toothache "
    "backache photophobia tinnitus tremor weakness malaise anorexia thirst bruising bleeding soreness"
).split()


def icd_vocabulary() -> list[str]:
    return list(DIAGNOSES)


def make_seeds(n: int, rng_seed: int = 7, n_options: int = 5) -> list[QuestionSeed]:
    rng = random.Random(rng_seed)
    seeds = []
    labels = "ABCDEFGHIJKLMNOPQRSTU"[:n_options]
    for i in range(n):
        picks = rng.sample(DIAGNOSES, n_options)
        correct = rng.randrange(n_options)
        symptoms = SYMPTOM_SETS[i % len(SYMPTOM_SETS)]
        age = rng.randrange(18, 80)
        seeds.append(
            QuestionSeed(
                id=f"seed-{i:04d}",
                source="synthetic",
                stem=(
                    f"A {age}-year-old patient presents with {symptoms}. "
                    "Which of the following is the most likely diagnosis?"
                ),
                options={labels[j]: picks[j] for j in range(n_options)},
                correct_label=labels[correct],
                ground_truth=(
                    f"The presentation of {symptoms} makes {picks[correct]} the most likely diagnosis here."
                ),
                difficulty="unknown",
            )
        )
    return seeds


# -- dual-expert loop plans ------------------------------------------------------


@dataclass
class IterationPlan:
    # (content, rating) pairs; the probe answers "yes" after the last step
    # when ``discussed`` is set
    steps: list[tuple[str, int]]
    discussed: bool = True
    diagnosis: str | None = None  # meaningful only when discussed


@dataclass
class LoopPlan:
    """A fully scripted loop outcome for one seed."""

    facts: list[str]
    hypotheses: list[str]
    iterations: list[IterationPlan]
    expected_termination: str = "diagnosed"

    def final_answer(self) -> str:
        for it in self.iterations:
            if it.discussed and it.diagnosis is not None:
                return it.diagnosis
        return ""


def loop_scripts(plan: LoopPlan) -> tuple[list[str], list[str]]:
    """(reasoning replies, reflection replies) matching run_loop's exact
    call order for an all-valid script."""
    reasoning = [
        "<Reasoning>" + "\n".join(plan.facts) + "</Reasoning>",
        "<Reasoning>" + "\n".join(plan.hypotheses) + "</Reasoning>",
    ]
    reflection = []
    for it in plan.iterations:
        for step_i, (content, rating) in enumerate(it.steps):
            reasoning.append(f"<Reasoning>{content}</Reasoning>")
            reflection.append(f"<Feedback>feedback on: {content}</Feedback>\n<Rating>{rating}</Rating>")
            last = step_i == len(it.steps) - 1
            reasoning.append(f"<Decision>{'yes' if (last and it.discussed) else 'no'}</Decision>")
        if it.discussed:
            reasoning.append("<Ranking>" + "\n".join(plan.hypotheses) + "</Ranking>")
            reasoning.append(f"<Diagnosis>{it.diagnosis if it.diagnosis is not None else 'none'}</Diagnosis>")
    return reasoning, reflection


def simple_plan(seed: QuestionSeed, n_steps: int = 3, wrong_answer: bool = False, zero_rated: int = 1) -> LoopPlan:
    """A one-iteration plan that diagnoses with the seed's correct option
    text (or a wrong option when asked). zero_rated of the steps get
    rating 0."""
    correct_text = seed.options[seed.correct_label]
    wrong_label = next(l for l in seed.options if l != seed.correct_label)
    answer = seed.options[wrong_label] if wrong_answer else correct_text
    steps = []
    for i in range(n_steps):
        rating = 0 if i < zero_rated else 1
        steps.append(
            (
                f"step {i + 1} for {seed.id}: the finding pattern narrows the differential toward a leading candidate",
                rating,
            )
        )
    hypotheses = [correct_text, seed.options[wrong_label]]
    return LoopPlan(
        facts=[f"known fact one for {seed.id}", f"known fact two for {seed.id}"],
        hypotheses=hypotheses,
        iterations=[IterationPlan(steps=steps, discussed=True, diagnosis=answer)],
        expected_termination="diagnosed",
    )


def fuzz_plan(seed: QuestionSeed, config: LoopConfig, rng: random.Random) -> LoopPlan:
    """A random plan consistent with the given config.

    Outcomes: diagnosed, budget_exhausted (probe never says yes), or
    knowledge_limit (no-diagnosis rounds exhaust the knowledge budget).
    Step contents carry unique markers so prompt-audit assertions can track
    them.
    """
    correct_text = seed.options[seed.correct_label]
    facts = [f"fact-{seed.id}-{i} observed" for i in range(rng.randint(1, 3))]
    hypotheses = [correct_text] + rng.sample(
        [t for t in DIAGNOSES if t != correct_text], rng.randint(1, 2)
    )

    outcome = rng.choice(["diagnosed", "diagnosed", "budget_exhausted", "knowledge_limit"])
    if outcome == "knowledge_limit" and config.max_iterations < config.max_knowledge_requests + 2:
        outcome = "budget_exhausted"

    def steps_for(n: int, tag: int) -> list[tuple[str, int]]:
        # long enough that a one-step narration stays inside the 2x scale bound
        return [
            (
                f"step-{seed.id}-{tag}-{i} connects the presenting evidence with the "
                "leading candidate through a coherent causal chain",
                rng.randint(0, 1),
            )
            for i in range(n)
        ]

    iterations: list[IterationPlan] = []
    if outcome == "diagnosed":
        n_before = rng.randint(0, min(1, config.max_iterations - 1))
        for j in range(n_before):
            if rng.random() < 0.5 and j < config.max_knowledge_requests:
                # discussed but no diagnosis: consumes one knowledge request
                iterations.append(
                    IterationPlan(steps=steps_for(rng.randint(1, 2), j), discussed=True, diagnosis=None)
                )
            else:
                iterations.append(
                    IterationPlan(steps=steps_for(config.steps_per_iteration, j), discussed=False)
                )
        final_steps = steps_for(rng.randint(1, min(3, config.steps_per_iteration)), 90)
        if not any(r == 1 for _, r in final_steps):  # keep at least one narratable step
            final_steps[-1] = (final_steps[-1][0], 1)
        iterations.append(IterationPlan(steps=final_steps, discussed=True, diagnosis=correct_text))
    elif outcome == "budget_exhausted":
        for j in range(config.max_iterations):
            iterations.append(
                IterationPlan(steps=steps_for(config.steps_per_iteration, j), discussed=False)
            )
    else:  # knowledge_limit: m no-diagnosis rounds, then one more failed attempt
        for j in range(config.max_knowledge_requests + 1):
            iterations.append(
                IterationPlan(steps=steps_for(rng.randint(1, 2), j), discussed=True, diagnosis=None)
            )

    plan = LoopPlan(
        facts=facts,
        hypotheses=hypotheses,
        iterations=iterations,
        expected_termination=outcome,
    )
    return plan


def expected_iterations(plan: LoopPlan) -> int:
    return len(plan.iterations)


def narration_reply(rated_contents: list[str], answer: str) -> str:
    """A monologue that satisfies all four narration validators for the
    given rating-1 step contents."""
    transitions = ["Therefore", "Then", "Furthermore", "However"]
    sentences = []
    for i, content in enumerate(rated_contents):
        sentences.append(f"{transitions[i % len(transitions)]} {content}.")
    sentences.append(f"So the answer is {answer}.")
    return " ".join(sentences)


# -- end-to-end pipeline scripts --------------------------------------------------


@dataclass
class PipelineScripts:
    """Per-stage mock scripts for the seeds -> sft chain."""

    rewriter: list[str] = field(default_factory=list)
    reasoning: list[str] = field(default_factory=list)
    reflection: list[str] = field(default_factory=list)
    narrator: list[str] = field(default_factory=list)
    plans: dict[str, LoopPlan] = field(default_factory=dict)


def open_stem_for(seed: QuestionSeed) -> str:
    return f"What is the most likely diagnosis for this presentation? (case {seed.id})"


def pipeline_scripts(seeds: list[QuestionSeed], wrong_answer_ids: set[str] | None = None) -> PipelineScripts:
    """Scripts for rewrite -> synth -> narrate over the given seeds in order.

    Seeds named in wrong_answer_ids get traces whose diagnosis maps to an
    incorrect option, so the sft stage must drop them.
    """
    wrong_answer_ids = wrong_answer_ids or set()
    scripts = PipelineScripts()
    for seed in seeds:
        scripts.rewriter.append(open_stem_for(seed))
        plan = simple_plan(seed, n_steps=3, wrong_answer=seed.id in wrong_answer_ids, zero_rated=1)
        scripts.plans[seed.id] = plan
        reasoning, reflection = loop_scripts(plan)
        scripts.reasoning.extend(reasoning)
        scripts.reflection.extend(reflection)
    for seed in seeds:
        if seed.id in wrong_answer_ids:
            continue  # dropped before narration
        plan = scripts.plans[seed.id]
        rated = [c for it in plan.iterations for c, r in it.steps if r == 1]
        scripts.narrator.append(narration_reply(rated, plan.final_answer()))
    return scripts


# -- foundry fixtures --------------------------------------------------------------


def make_dialogues(n: int, rng_seed: int = 11, near_duplicates: int = 0) -> list[DialogueRecord]:
    """Synthetic consultations carrying de-identifiable names, institutions
    and locations.

    Complaints are built from unique symptom quads plus a per-dialogue ref
    token so distinct dialogues stay well below the default dedup threshold;
    dialogues 1..near_duplicates copy dialogue 0's complaint verbatim.
    """
    rng = random.Random(rng_seed)
    dialogues = []
    seen_quads: set[tuple[str, ...]] = set()
    first_complaint = ""
    for i in range(n):
        name = rng.choice(_NAMES)
        institution = rng.choice(_INSTITUTIONS)
        location = rng.choice(_LOCATIONS)
        quad = tuple(sorted(rng.sample(_SYMPTOM_WORDS, 4)))
        while quad in seen_quads:
            quad = tuple(sorted(rng.sample(_SYMPTOM_WORDS, 4)))
        seen_quads.add(quad)
        duration = rng.randint(2, 9)
        complaint = (
            f"{quad[0]} and {quad[1]} with {quad[2]} plus {quad[3]} for {duration} days, ref {i}."
        )
        if i == 0:
            first_complaint = complaint
        if 0 < i <= near_duplicates:
            complaint = first_complaint
        gender = "male" if rng.random() < 0.5 else "female"
        dialogues.append(
            DialogueRecord(
                id=f"dlg-{i:04d}",
                department=DEPARTMENTS[i % len(DEPARTMENTS)],
                patient={"age": rng.randrange(0, 91), "gender": gender},
                turns=[
                    {"speaker": "patient", "text": complaint},
                    {
                        "speaker": "doctor",
                        "text": f"I am Dr. {name} from {institution} in {location}. How long has this lasted?",
                    },
                    {"speaker": "patient", "text": "About three days, getting slightly worse."},
                    {"speaker": "doctor", "text": "Thank you, let me note this down and examine you."},
                ],
            )
        )
    return dialogues


def emr_reply(diagnosis: str, complaint: str) -> str:
    return "\n".join(
        [
            f"Chief Complaint: {complaint}",
            "Present Illness: symptoms started three days ago and progressed slightly",
            "Past History: unremarkable",
            "Allergy History: no known drug allergies",
            "Exams: physical examination; vital signs",
            f"Diagnosis: {diagnosis}",
        ]
    )


def question_reply(complaint: str) -> str:
    return (
        f"A patient reports the following: {complaint} "
        "Examination findings are as noted in the record. What is the most likely diagnosis?"
    )


def foundry_scripts(dialogues_after_dedup: list[DialogueRecord], rng_seed: int = 23) -> tuple[list[str], list[str]]:
    """(emr replies, question replies) for the post-dedup dialogue order.

    Dialogue complaints are echoed with placeholders intact, so prompt-log
    audits stay free of rule matches.
    """
    rng = random.Random(rng_seed)
    emr_replies = []
    question_replies = []
    for dialogue in dialogues_after_dedup:
        complaint = next(t["text"] for t in dialogue.turns if t["speaker"] == "patient")
        diagnosis = rng.choice(DIAGNOSES)
        emr_replies.append(emr_reply(diagnosis, complaint))
        question_replies.append(question_reply(complaint))
    return emr_replies, question_replies


def stats_fixture_items(n_male: int = 58, n_female: int = 42) -> list[DialogueRecord]:
    """Demographic fixture: n_male/n_female records, ages all in 21-40."""
    dialogues = []
    for i in range(n_male + n_female):
        gender = "male" if i < n_male else "female"
        dialogues.append(
            DialogueRecord(
                id=f"fx-{i:04d}",
                department=DEPARTMENTS[i % len(DEPARTMENTS)],
                patient={"age": 21 + (i % 20), "gender": gender},
                turns=[
                    {"speaker": "patient", "text": f"complaint {i}"},
                    {"speaker": "doctor", "text": "noted"},
                ],
            )
        )
    return dialogues
