"""Attention-shift detection.

Online detectors monitor the cosine similarity between the prefill anchor
attention (over the retained set) and the current step's attention over
the same set, firing when the visual focus has moved. The offline counter
turns a whole similarity series into discrete shift events by intersecting
sub-threshold steps with local minima, so one contiguous low-similarity
excursion counts once rather than per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import AttentionWeights, cosine_similarity, scaled_dot_attention
from .prune import PruneState
from .scenario import VisualTokenBank

DETECTORS = ("risd", "avg", "random")

# deployment default for the engine; offline analysis uses 0.7 (see analytics)
DEFAULT_ENGINE_TAU = 0.75
DEFAULT_ANALYSIS_TAU = 0.7


@dataclass(frozen=True)
class RisdConfig:
    tau: float = DEFAULT_ENGINE_TAU
    detector: str = "risd"
    random_rate: float = 0.0

    def validate(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau: must be in [0, 1]")
        if self.detector not in DETECTORS:
            raise ValueError(f"detector: must be one of {DETECTORS}")
        if not 0.0 <= self.random_rate <= 1.0:
            raise ValueError("random_rate: must be in [0, 1]")


@dataclass(frozen=True)
class ShiftEvent:
    step: int
    similarity: float
    kind: str  # "online_trigger" | "offline_event"


def pruned_attention(query, state: PruneState, bank: VisualTokenBank) -> AttentionWeights:
    """Attention over only the retained keys, indexed by their token ids."""
    return scaled_dot_attention(query, bank.keys[state.pruned], index_map=state.pruned)


def similarity_to_anchor(state: PruneState, current: AttentionWeights) -> float:
    """Cosine similarity between the anchor and the current retained-set attention."""
    if not np.array_equal(current.index_map, state.pruned):
        raise ValueError("current attention must be indexed by the pruned set")
    return cosine_similarity(state.anchor_pruned.weights, current.weights)


def detect_shift(s: float, config: RisdConfig) -> bool:
    """Fixed-threshold detector: fires iff s < tau (strict)."""
    return s < config.tau


def detect_shift_avg(history, s: float) -> bool:
    """Running-average detector: fires iff s is below the mean of all prior
    similarities. Returns False on the first step (empty history)."""
    if len(history) == 0:
        return False
    return s < float(np.mean(history))


def detect_shift_random(config: RisdConfig, rng: np.random.Generator) -> bool:
    """Fires with probability random_rate per eligible step (seeded)."""
    return rng.random() < config.random_rate


def count_rvis_events(similarities, tau: float) -> list[ShiftEvent]:
    """Offline shift events: local minima of the series that lie below tau.

    Rules (each making the count insensitive to consecutive low steps):

    * candidates are steps with s < tau (strict);
    * strict local minima qualify (s[l-1] > s[l] < s[l+1]);
    * a maximal run of equal values flanked on both sides by strictly
      larger neighbors counts once, at its first index;
    * an endpoint qualifies if strictly below its single neighbor.

    Event steps are positions in the input series, ascending.
    """
    s = np.asarray(similarities, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("similarity series must be a non-empty 1-d sequence")
    n = s.size
    minima: list[int] = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        left_larger = i > 0 and s[i - 1] > s[i]
        right_larger = j < n - 1 and s[j + 1] > s[i]
        if i == j:
            if (
                (i == 0 and right_larger)
                or (j == n - 1 and left_larger)
                or (left_larger and right_larger)
            ):
                minima.append(i)
        elif left_larger and right_larger:
            minima.append(i)
        i = j + 1
    return [
        ShiftEvent(step=m, similarity=float(s[m]), kind="offline_event")
        for m in minima
        if s[m] < tau
    ]


def calibrate_random_rate(trace) -> float:
    """Trigger frequency of a detector run: triggers / eligible monitored steps.

    Used to parameterize a matched random-detector replay.
    """
    eligible = sum(1 for rec in trace.records if rec.s is not None)
    if eligible == 0:
        raise ValueError("trace has no eligible monitoring steps")
    triggers = sum(1 for rec in trace.records if rec.triggered)
    return triggers / eligible
