"""Corpus-mixing bandit: sources are arms, per-source training loss is the
reward, output is a sampling-ratio schedule.

The policy is EXP3 with an exploration floor: importance-weighted reward
estimates feed exponential weight updates, so the mixer keeps shifting
probability mass toward sources whose recent losses stay high (more left
to learn) while the floor guarantees every source keeps flowing. Raw
rewards are squashed to [0, 1] with a per-source running min-max window;
a UCB1 variant is available behind config for comparison.
"""

from __future__ import annotations

import math
from typing import Iterable

from .records import MixerState, RewardEvent

DEFAULT_FLOOR = 0.05
DEFAULT_ETA = 0.1
DEFAULT_WINDOW = 100

_WEIGHT_MIN = 1e-12


class MixerError(ValueError):
    pass


def init_mixer(
    source_ids: list[str],
    floor: float = DEFAULT_FLOOR,
    eta: float = DEFAULT_ETA,
    window: int = DEFAULT_WINDOW,
) -> MixerState:
    k = len(source_ids)
    if k < 2:
        raise MixerError(f"need at least 2 sources, got {k}")
    if len(set(source_ids)) != k:
        raise MixerError("source ids must be unique")
    if not 0 <= floor < 1 / k:
        raise MixerError(f"floor must satisfy 0 <= eps < 1/K (K={k}), got {floor}")
    if eta <= 0:
        raise MixerError(f"eta must be > 0, got {eta}")
    if window < 1:
        raise MixerError(f"window must be >= 1, got {window}")
    arms = [
        {"source_id": sid, "weight": 1.0, "pulls": 0, "cum_reward": 0.0, "recent": []}
        for sid in source_ids
    ]
    return MixerState(arms=arms, t=0, floor=floor, eta=eta, window=window)


def sample_ratios(state: MixerState) -> dict[str, float]:
    """p_i = (1 - K*eps) * w_i / sum(w) + eps; sums to 1 on the simplex."""
    k = len(state.arms)
    total = sum(a["weight"] for a in state.arms)
    return {
        a["source_id"]: (1 - k * state.floor) * (a["weight"] / total) + state.floor
        for a in state.arms
    }


def _normalize_reward(raw: float, window_values: list[float]) -> float:
    """Min-max squash over the window. A spread-free window (first event,
    or a constant stream) carries no learnable contrast and normalizes to
    0 — the zero-reward fixed point, which keeps equal-reward streams
    exactly uniform."""
    lo, hi = min(window_values), max(window_values)
    if hi > lo:
        return (raw - lo) / (hi - lo)
    return 0.0


def update(state: MixerState, event: RewardEvent, pre_normalized: bool = False) -> MixerState:
    """One EXP3 step: importance-weight the normalized reward by the
    pre-update sampling probability, bump the arm's weight exponentially,
    then renormalize weights to mean 1 (clamped away from underflow).

    pre_normalized skips the window squash for streams whose rewards are
    already in [0, 1] (they are still clamped defensively).
    """
    ids = [a["source_id"] for a in state.arms]
    if event.source_id not in ids:
        raise MixerError(f"unknown source {event.source_id!r}")
    k = len(state.arms)
    probs = sample_ratios(state)

    new_arms = []
    for arm in state.arms:
        a = dict(arm)
        a["recent"] = list(a["recent"])
        if a["source_id"] == event.source_id:
            a["recent"].append(float(event.reward))
            if len(a["recent"]) > state.window:
                a["recent"] = a["recent"][-state.window:]
            if pre_normalized:
                r_norm = min(max(float(event.reward), 0.0), 1.0)
            else:
                r_norm = _normalize_reward(float(event.reward), a["recent"])
            r_hat = r_norm / probs[a["source_id"]]
            a["weight"] = a["weight"] * math.exp(state.eta * r_hat / k)
            a["pulls"] += 1
            a["cum_reward"] += r_norm
        new_arms.append(a)

    mean_w = sum(a["weight"] for a in new_arms) / k
    for a in new_arms:
        a["weight"] = max(a["weight"] / mean_w, _WEIGHT_MIN)

    return MixerState(arms=new_arms, t=state.t + 1, floor=state.floor, eta=state.eta, window=state.window)


def schedule(
    state: MixerState,
    events: Iterable[RewardEvent],
    phase_len: int,
    pre_normalized: bool = False,
) -> list[dict[str, float]]:
    """Replay events, emitting the ratio vector at the start and after each
    full phase of phase_len events (plus once more for a trailing partial
    phase). Deterministic."""
    if phase_len < 1:
        raise MixerError(f"phase_len must be >= 1, got {phase_len}")
    vectors = [sample_ratios(state)]
    since_emit = 0
    for event in events:
        state = update(state, event, pre_normalized=pre_normalized)
        since_emit += 1
        if since_emit == phase_len:
            vectors.append(sample_ratios(state))
            since_emit = 0
    if since_emit:
        vectors.append(sample_ratios(state))
    return vectors


class Ucb1Mixer:
    """Alternate policy for comparison: UCB1 scores softmax-free, rendered
    as floor + the remaining mass on the current argmax arm."""

    def __init__(self, source_ids: list[str], floor: float = DEFAULT_FLOOR):
        if len(source_ids) < 2:
            raise MixerError("need at least 2 sources")
        if not 0 <= floor < 1 / len(source_ids):
            raise MixerError("floor must satisfy 0 <= eps < 1/K")
        self.floor = floor
        self.pulls = {sid: 0 for sid in source_ids}
        self.means = {sid: 0.0 for sid in source_ids}
        self.t = 0

    def update(self, event: RewardEvent) -> None:
        if event.source_id not in self.pulls:
            raise MixerError(f"unknown source {event.source_id!r}")
        self.t += 1
        n = self.pulls[event.source_id] = self.pulls[event.source_id] + 1
        mean = self.means[event.source_id]
        self.means[event.source_id] = mean + (float(event.reward) - mean) / n

    def sample_ratios(self) -> dict[str, float]:
        k = len(self.pulls)
        unpulled = [sid for sid, n in self.pulls.items() if n == 0]
        if unpulled:
            best = unpulled[0]
        else:
            best = max(
                self.pulls,
                key=lambda sid: self.means[sid] + math.sqrt(2 * math.log(max(self.t, 1)) / self.pulls[sid]),
            )
        return {sid: self.floor + (1 - k * self.floor) * (1.0 if sid == best else 0.0) for sid in self.pulls}
