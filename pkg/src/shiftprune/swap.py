"""Context-preserving token swapping.

On a detected shift the full bank is re-scored against the current query,
a fresh top-k is selected, and the active set is rebuilt by one of four
strategies: union with the prefill set (the default, bounding the active
size by [k, 2k] at matched budgets), hard replacement, merge of the old
context into one synthetic mean token, or full un-pruning. The expanded
set lives for a fixed countdown of decode steps, then reverts to the
prefill set (or re-selects, as a variant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import AttentionWeights, scaled_dot_attention, softmax, top_k
from .prune import PruneState
from .scenario import VisualTokenBank

SWAP_STRATEGIES = ("cpts", "hard", "merge", "full")
EXPIRY_MODES = ("revert", "reselect")
IMPORTANCE_MODES = ("joint", "concat")

MERGED_TOKEN_ID = -1  # sentinel id for the synthetic mean-key token

DEFAULT_DURATION = 20


@dataclass(frozen=True)
class SwapConfig:
    strategy: str = "cpts"
    duration: int = DEFAULT_DURATION
    k_dec: int | None = None  # decoding re-selection budget; None means k
    expiry: str = "revert"
    importance_mode: str = "joint"

    def validate(self) -> None:
        if self.strategy not in SWAP_STRATEGIES:
            raise ValueError(f"strategy: must be one of {SWAP_STRATEGIES}")
        if self.duration < 0:
            raise ValueError("duration: must be >= 0")
        if self.k_dec is not None and self.k_dec < 1:
            raise ValueError("k_dec: must be >= 1")
        if self.expiry not in EXPIRY_MODES:
            raise ValueError(f"expiry: must be one of {EXPIRY_MODES}")
        if self.importance_mode not in IMPORTANCE_MODES:
            raise ValueError(f"importance_mode: must be one of {IMPORTANCE_MODES}")

    def resolve_k_dec(self, k: int, n_visual: int) -> int:
        k_dec = self.k_dec if self.k_dec is not None else k
        if not 1 <= k_dec <= n_visual:
            raise ValueError(f"k_dec={k_dec} out of range [1, {n_visual}]")
        return k_dec


@dataclass(frozen=True)
class ActiveSet:
    """Visual tokens currently visible to the decode step.

    indices are sorted token ids; MERGED_TOKEN_ID marks the synthetic slot
    whose key is carried in merged_key. provenance tags each slot as
    prefill | swapped | merged.
    """

    indices: np.ndarray
    provenance: tuple[str, ...]
    k_star: int
    merged_key: np.ndarray | None = None

    def __post_init__(self):
        if self.indices.size != len(self.provenance):
            raise ValueError("provenance must align with indices")
        if self.k_star != self.indices.size:
            raise ValueError("k_star must equal the active set size")


def base_active_set(state: PruneState) -> ActiveSet:
    """The prefill retained set, as an active set."""
    return ActiveSet(
        indices=state.pruned.copy(),
        provenance=("prefill",) * state.k,
        k_star=state.k,
    )


def full_active_set(bank: VisualTokenBank, provenance: str = "prefill") -> ActiveSet:
    return ActiveSet(
        indices=bank.token_ids,
        provenance=(provenance,) * bank.n_visual,
        k_star=bank.n_visual,
    )


def reevaluate_importance(
    query, state: PruneState, bank: VisualTokenBank, mode: str = "joint"
) -> AttentionWeights:
    """Importance scores over the whole bank for the current query.

    joint: one softmax over all keys (total mass 1) — exact re-scoring,
    equal to the full attention vector.

    concat: independent softmaxes over the retained and reserved keys,
    concatenated in (retained, reserved) order with global token ids
    (total mass 2). Cheaper in a real decoder since the retained half is
    already computed, but cross-group ranks are biased by the separate
    normalizations; kept for fidelity to that formulation. Within each
    group the weight order still matches the logit order. An empty
    reserved set degenerates to the retained-only attention.
    """
    if mode == "joint":
        return scaled_dot_attention(query, bank.keys)
    if mode != "concat":
        raise ValueError(f"unknown importance mode {mode!r}")
    if state.reserved.size == 0:
        return scaled_dot_attention(query, bank.keys[state.pruned], index_map=state.pruned)
    q = np.asarray(query, dtype=np.float64)
    scale = np.sqrt(q.shape[0])
    pruned_part = softmax(bank.keys[state.pruned] @ q / scale, index_map=state.pruned)
    reserved_part = softmax(bank.keys[state.reserved] @ q / scale, index_map=state.reserved)
    return AttentionWeights(
        np.concatenate([pruned_part.weights, reserved_part.weights]),
        np.concatenate([state.pruned, state.reserved]),
        group_sizes=(state.pruned.size, state.reserved.size),
    )


def select_new_set(importance: AttentionWeights, k_dec: int) -> np.ndarray:
    """Token ids of the k_dec highest importance scores, sorted ascending.

    Ties break by position in the score vector, so in concat mode the
    retained group wins exact ties.
    """
    pos = top_k(importance.weights, k_dec)
    return np.sort(importance.index_map[pos])


def union_swap(state: PruneState, new_set: np.ndarray) -> ActiveSet:
    """Union of the prefill set and the newly selected set (context kept)."""
    new_set = np.asarray(new_set, dtype=np.int64)
    indices = np.union1d(state.pruned, new_set)
    prefill = set(int(i) for i in state.pruned)
    provenance = tuple("prefill" if int(i) in prefill else "swapped" for i in indices)
    return ActiveSet(indices=indices, provenance=provenance, k_star=int(indices.size))


def hard_swap(state: PruneState, new_set: np.ndarray) -> ActiveSet:
    """Replace the active set entirely with the newly selected tokens."""
    indices = np.sort(np.asarray(new_set, dtype=np.int64))
    return ActiveSet(
        indices=indices, provenance=("swapped",) * indices.size, k_star=int(indices.size)
    )


def merge_swap(state: PruneState, new_set: np.ndarray, bank: VisualTokenBank) -> ActiveSet:
    """Compress the prefill set into one synthetic mean-key token.

    The synthetic key is the unit-normalized arithmetic mean of the prefill
    retained keys, carried alongside the newly selected tokens. A zero mean
    (degenerate merge) falls back to retaining the prefill token with the
    highest anchor weight instead of a synthetic slot.
    """
    new_set = np.sort(np.asarray(new_set, dtype=np.int64))
    mean_key = bank.keys[state.pruned].mean(axis=0)
    norm = float(np.linalg.norm(mean_key))
    if norm < 1e-12:
        best = int(state.pruned[int(np.argmax(state.anchor_pruned.weights))])
        indices = np.union1d(new_set, np.array([best], dtype=np.int64))
        provenance = tuple(
            "merged" if int(i) == best else "swapped" for i in indices
        )
        return ActiveSet(indices=indices, provenance=provenance, k_star=int(indices.size))
    indices = np.concatenate([[MERGED_TOKEN_ID], new_set]).astype(np.int64)
    provenance = ("merged",) + ("swapped",) * new_set.size
    return ActiveSet(
        indices=indices,
        provenance=provenance,
        k_star=int(indices.size),
        merged_key=mean_key / norm,
    )


def full_swap(bank: VisualTokenBank) -> ActiveSet:
    """Un-prune: every bank token active (ablation upper bound)."""
    return full_active_set(bank, provenance="swapped")


def apply_swap(
    strategy: str, state: PruneState, new_set: np.ndarray, bank: VisualTokenBank
) -> ActiveSet:
    if strategy == "cpts":
        return union_swap(state, new_set)
    if strategy == "hard":
        return hard_swap(state, new_set)
    if strategy == "merge":
        return merge_swap(state, new_set, bank)
    if strategy == "full":
        return full_swap(bank)
    raise ValueError(f"unknown swap strategy {strategy!r}")


def active_set_attention(query, active: ActiveSet, bank: VisualTokenBank) -> AttentionWeights:
    """Attention over the active set's keys, synthetic merged key included."""
    rows = []
    for idx in active.indices:
        if idx == MERGED_TOKEN_ID:
            rows.append(active.merged_key)
        else:
            rows.append(bank.keys[idx])
    return scaled_dot_attention(query, np.asarray(rows), index_map=active.indices)


def tick_and_maybe_expire(
    remaining: int,
    state: PruneState,
    config: SwapConfig,
    bank: VisualTokenBank,
    query,
) -> tuple[int, ActiveSet | None]:
    """Advance an open context window by one step.

    Returns (new_remaining, new_active_set) where the active set is None
    while the window stays open. At expiry: revert hands back the prefill
    set; reselect performs a fresh union swap with the current query and
    opens a fresh window.
    """
    if remaining <= 0:
        raise ValueError("tick requires an open window (remaining > 0)")
    remaining -= 1
    if remaining > 0:
        return remaining, None
    if config.expiry == "revert":
        return 0, base_active_set(state)
    importance = reevaluate_importance(query, state, bank, config.importance_mode)
    k_dec = config.resolve_k_dec(state.k, bank.n_visual)
    new_set = select_new_set(importance, k_dec)
    return config.duration, union_swap(state, new_set)
