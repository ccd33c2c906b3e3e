"""medforge: a training-data foundry and evaluation toolkit.

Stages: question rewriting and triage, dual-expert chain-of-thought
synthesis, first-person narration into SFT records, rejection-sampled
preference pairs, bandit-scheduled corpus mixing, benchmark-item
construction with a three-tier review service, and an MCQ eval harness.
"""

__version__ = "0.1.0"
