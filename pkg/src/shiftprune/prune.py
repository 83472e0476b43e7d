"""Prefill-stage pruning strategies.

Each strategy splits the token bank into a retained ("pruned") set of size
k and a reserved complement kept addressable for later recovery, and
records the anchor attention pair: the full-bank attention at step 0 and a
fresh softmax over the retained keys only. The fresh softmax keeps the
anchor on identical footing with the per-step monitored attention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import AttentionWeights, farthest_point_select, scaled_dot_attention, top_k
from .scenario import VisualTokenBank

STRATEGIES = ("topk", "diversity", "random")


@dataclass(frozen=True)
class PruneState:
    pruned: np.ndarray  # sorted token ids, size k
    reserved: np.ndarray  # sorted complement
    anchor_full: AttentionWeights  # over all tokens
    anchor_pruned: AttentionWeights  # over the pruned set only
    k: int

    def __post_init__(self):
        n = self.anchor_full.n
        if self.pruned.size != self.k:
            raise ValueError("pruned set size must equal k")
        union = np.union1d(self.pruned, self.reserved)
        if union.size != n or np.intersect1d(self.pruned, self.reserved).size:
            raise ValueError("pruned and reserved must partition the bank")
        if not np.array_equal(self.anchor_pruned.index_map, self.pruned):
            raise ValueError("anchor_pruned must be indexed by the pruned set")


def _check_budget(k: int, n_visual: int) -> None:
    if not 1 <= k <= n_visual:
        raise ValueError(f"budget k={k} out of range [1, {n_visual}]")


def _finalize(
    bank: VisualTokenBank, pruned: np.ndarray, anchor_full: AttentionWeights, prefill_query
) -> PruneState:
    pruned = np.sort(np.asarray(pruned, dtype=np.int64))
    reserved = np.setdiff1d(bank.token_ids, pruned)
    anchor_pruned = scaled_dot_attention(prefill_query, bank.keys[pruned], index_map=pruned)
    return PruneState(
        pruned=pruned,
        reserved=reserved,
        anchor_full=anchor_full,
        anchor_pruned=anchor_pruned,
        k=int(pruned.size),
    )


def attention_topk_prune(
    anchor_full: AttentionWeights, bank: VisualTokenBank, k: int, prefill_query
) -> PruneState:
    """Retain the k tokens with the highest anchor attention weights."""
    _check_budget(k, bank.n_visual)
    pruned = top_k(anchor_full.weights, k)
    return _finalize(bank, pruned, anchor_full, prefill_query)


def diversity_max_prune(bank: VisualTokenBank, k: int, prefill_query) -> PruneState:
    """Retain a greedy max-min diverse subset of the bank's keys."""
    _check_budget(k, bank.n_visual)
    anchor_full = scaled_dot_attention(prefill_query, bank.keys)
    pruned = farthest_point_select(bank.keys, k)
    return _finalize(bank, pruned, anchor_full, prefill_query)


def random_prune(bank: VisualTokenBank, k: int, seed: int, prefill_query) -> PruneState:
    """Retain a uniformly random k-subset under the seed (baseline)."""
    _check_budget(k, bank.n_visual)
    anchor_full = scaled_dot_attention(prefill_query, bank.keys)
    rng = np.random.default_rng(seed)
    pruned = rng.choice(bank.n_visual, size=k, replace=False)
    return _finalize(bank, pruned, anchor_full, prefill_query)


def resolve_budget(n_visual: int, k: int | None = None, ratio: float | None = None) -> int:
    """Token budget from an explicit k or a retention ratio (k = round(R*N))."""
    if (k is None) == (ratio is None):
        raise ValueError("exactly one of k or ratio must be given")
    if k is None:
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"ratio={ratio} out of range (0, 1]")
        k = int(round(ratio * n_visual))
        k = max(1, min(k, n_visual))
    return int(k)


def run_strategy(
    name: str,
    bank: VisualTokenBank,
    k: int,
    prefill_query,
    anchor_full: AttentionWeights | None = None,
    seed: int = 0,
) -> PruneState:
    """Dispatch on strategy name ('topk' | 'diversity' | 'random')."""
    if name == "topk":
        if anchor_full is None:
            anchor_full = scaled_dot_attention(prefill_query, bank.keys)
        return attention_topk_prune(anchor_full, bank, k, prefill_query)
    if name == "diversity":
        return diversity_max_prune(bank, k, prefill_query)
    if name == "random":
        return random_prune(bank, k, seed, prefill_query)
    raise ValueError(f"unknown prune strategy {name!r} (expected one of {STRATEGIES})")
