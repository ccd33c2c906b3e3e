"""Built-in prompt bodies for every pipeline stage.

Slots use ``{name}`` syntax and are substituted in a single pass, so bound
values may themselves contain braces. Any template can be overridden by a
``<name>.txt`` file in the configured templates_dir.
"""

from __future__ import annotations

DEFAULT_STEP_REQUIREMENTS = """\
- Begin with small, foundational observations
- Question each step thoroughly
- Show natural thought progression
- Express doubts and uncertainties
- Revise and backtrack if you need to
- Continue until natural resolution"""

# The shared preamble of every reasoning-side prompt: the proposer role.
REASONING_EXPERT = """\
You are tasked with addressing a medical examination question. Please carefully read the question, provide a detailed thought process, and then present your final answer.

Here is the question:
<Question>
{Q}
</Question>

Facing on the previous question, you are an assistant that engages in extremely thorough, self-questioning reasoning.
Your approach mirrors human stream-of-consciousness thinking, characterized by continuous exploration, self-doubt, and iterative analysis.
With the expectation that when facing this medical issue, you will be able to apply professional medical reasoning methods, such as differential diagnosis, to further reason and think about the problem.

Below is the definition of the differential diagnosis method in medical reasoning:
Differential diagnosis refers to the process of systematically considering different possible diseases, ruling out diagnoses that do not match the condition, and ultimately determining the most likely disease. It involves the following steps:
- Collecting information: Inquire about the medical history, conduct physical exams, and perform necessary laboratory tests.
- Listing possible diagnoses: Based on the medical history, signs, symptoms, and laboratory results, list all possible diseases.
- Gradually eliminating: Through further tests, symptom evaluations, and diagnostic tests, gradually eliminate impossible diagnoses, ultimately confirming the most likely disease.
Differential diagnosis is a process of comparison and contrast, where doctors judge each potential diagnosis based on its characteristics, finding the disease that most closely matches the patient's symptoms and signs.

Below are the reasoning requirements; please ensure each step of the reasoning process meets the following criteria:
{requirements}

Please review the question again:
<Question>
{Q}
</Question>
"""

FACTS = REASONING_EXPERT + """
First, list all the known information in the problem, including the complete medical history and all test results.
Write one fact per line, nothing else, inside the tags:
<Reasoning>
[one known fact per line]
</Reasoning>
"""

HYPOTHESES = REASONING_EXPERT + """
The known information so far:
{facts}

List the possible diagnoses that could explain this presentation, as the endpoints of the reasoning.
Write one candidate diagnosis per line, nothing else, inside the tags:
<Reasoning>
[one candidate diagnosis per line]
</Reasoning>
"""

REASON_STEP = REASONING_EXPERT + """
The known information so far:
{facts}

The candidate diagnoses under consideration:
{hypotheses}

Your prior reasoning steps and the feedback each received:
{history}

Perform forward reasoning: attempt to establish the logical path from the known information toward one of the candidate diagnoses, taking the feedback above into account.
Please follow this output format for the next valid and useful reasoning step:
<Reasoning>
[Insert your reasoning step here.]
</Reasoning>
"""

DISCUSSION_PROBE = REASONING_EXPERT + """
The candidate diagnoses under consideration:
{hypotheses}

Your reasoning steps so far:
{history}

Have all candidate diagnoses now been fully discussed, so that they can be ranked? Answer strictly with yes or no inside the tags:
<Decision>
yes or no
</Decision>
"""

RANKING = REASONING_EXPERT + """
The candidate diagnoses under consideration:
{hypotheses}

Your reasoning steps so far:
{history}

Rank the candidate diagnoses from most to least plausible, one per line, inside the tags:
<Ranking>
[one diagnosis per line, best first]
</Ranking>
"""

DIAGNOSIS_PROBE = REASONING_EXPERT + """
The ranked candidate diagnoses:
{hypotheses}

Your reasoning steps so far:
{history}

Can a single diagnosis now be made with confidence? If yes, output that diagnosis inside the tags; if not, output exactly the word none:
<Diagnosis>
[the diagnosis, or none]
</Diagnosis>
"""

REFLECTION_EXPERT_GT = """\
Please, as a very professional doctor, you will review the thought process of an ordinary doctor regarding a specific medical issue.
You will see the question <Question>, the previously established thought process <Previous Thought> and current reasoning step <Reasoning Step>.
Most importantly, you know the final answer <Ground Truth>.
Please carefully evaluate, from an objective and professional perspective, whether the doctor's reasoning step is logically sound.
You may think carefully, step by step, and provide rigorous reasoning to argue whether this reasoning step is logically valid.
Finally, you should rate its effectiveness with either 0 or 1, where 0 represents invalid, and 1 represents valid.
Regardless of whether the reasoning is valid or not, please provide your feedback.
If it is valid, please explain the logical reasoning form that is correct and suggest more possible directions for thinking.
If it is invalid, please point out the flaws in the reasoning and provide a revised thought direction.
The feedback should be heuristic, and you may guide them towards the correct answer.
Below are the question and knowledge:
<Question>
{Q}
</Question>
{GT}
Below is the previously established thought process:
<Previous Thought>
{previous_thought}
</Previous Thought>
Below is the current reasoning step:
<Reasoning Step>
{reasoning_step}
</Reasoning Step>
The output format should strictly follow the format below:
<Feedback>
step feedback
</Feedback>
<Rating>
1
</Rating>
Please consider whether the current reasoning step is positively helpful in answering the question, and remember to follow the output format at the end by providing feedback in a concise and precise text form, followed by the rating (0 or 1).
You can include the relevant knowledge in the feedback to provide necessary heuristic guidance, but do not mention terms like Ground Truth, Answer, etc., in the feedback.
Please use English for output:
"""

# Blind variant: same reviewer contract without access to the answer.
REFLECTION_EXPERT_PLAIN = """\
Please, as a very professional doctor, you will review the thought process of an ordinary doctor regarding a specific medical issue.
You will see the question <Question>, the previously established thought process <Previous Thought> and current reasoning step <Reasoning Step>.
Please carefully evaluate, from an objective and professional perspective, whether the doctor's reasoning step is logically sound.
Finally, you should rate its effectiveness with either 0 or 1, where 0 represents invalid, and 1 represents valid.
Regardless of whether the reasoning is valid or not, please provide your feedback.
If it is valid, please explain the logical reasoning form that is correct and suggest more possible directions for thinking.
If it is invalid, please point out the flaws in the reasoning and provide a revised thought direction.
Below are the question:
<Question>
{Q}
</Question>
Below is the previously established thought process:
<Previous Thought>
{previous_thought}
</Previous Thought>
Below is the current reasoning step:
<Reasoning Step>
{reasoning_step}
</Reasoning Step>
The output format should strictly follow the format below:
<Feedback>
step feedback
</Feedback>
<Rating>
1
</Rating>
Please use English for output:
"""

REWRITE_OPEN = """\
Rewrite the following closed-form multiple-choice question as a single open-ended question.
Remove every dependency on the answer options: do not mention options, letters, or phrases such as "which of the following", and do not include any option text.
Keep all clinical information from the stem. Output only the rewritten question, nothing else.

Original question:
{stem}
"""

TRIAGE_ANSWER = """\
Answer the following multiple-choice question.

{stem}

Options:
{options}

Think briefly, then give the exact text of the single best option inside the tags:
<answer>
[option text]
</answer>
"""

NARRATE = """\
Rewrite the reviewed reasoning steps below into a single first-person thinking monologue, as one continuous stream of thought.
Strict constraints:
- Keep the scale of the thought: do not compress or pad it substantially.
- Use narrative transition words such as furthermore, therefore, then, wait, so, however.
- Do not repeat any sentence.
- Keep the final conclusion exactly as given; it must appear verbatim.

Reasoning steps:
{steps}

Final conclusion: {answer}

Output only the monologue.
"""

JUDGE_SCORE = """\
You will assess one model response to an open-ended medical question.
Assess the reasoning process and conclusion: soundness of the clinical logic, coherence of the narrative, and whether the conclusion follows from the reasoning.

Question:
{question}

Response:
{response}

Give a single overall score from 0 (worthless) to 10 (flawless) inside the tags:
<Score>
[0-10]
</Score>
"""

EMR_EXTRACT = """\
Extract the key clinical elements from the consultation transcript below into a structured record.
Output exactly these labeled sections, one per line, using "not reported" when the transcript is silent:
Chief Complaint: ...
Present Illness: ...
Past History: ...
Allergy History: ...
Exams: ... (semicolon-separated if several)
Diagnosis: ...

Transcript:
{dialogue}
"""

QUESTION_FORMULATE = """\
Turn the structured medical record below into a clinical case-vignette question.
Describe the patient presentation from the record and end by asking for the most likely diagnosis.
Do not reveal the diagnosis in the question. Output only the question text.

Record:
{emr}
"""

MCQ_EVAL = """\
Answer the following multiple-choice question.

{stem}

Options:
{options}

Reply with the exact text of the single best option inside the tags:
<answer>
[option text]
</answer>
"""

BUILTIN_TEMPLATE_BODIES: dict[str, str] = {
    "facts": FACTS,
    "hypotheses": HYPOTHESES,
    "reason_step": REASON_STEP,
    "discussion_probe": DISCUSSION_PROBE,
    "ranking": RANKING,
    "diagnosis_probe": DIAGNOSIS_PROBE,
    "reflection_gt": REFLECTION_EXPERT_GT,
    "reflection_plain": REFLECTION_EXPERT_PLAIN,
    "rewrite_open": REWRITE_OPEN,
    "triage_answer": TRIAGE_ANSWER,
    "narrate": NARRATE,
    "judge_score": JUDGE_SCORE,
    "emr_extract": EMR_EXTRACT,
    "question_formulate": QUESTION_FORMULATE,
    "mcq_eval": MCQ_EVAL,
}
