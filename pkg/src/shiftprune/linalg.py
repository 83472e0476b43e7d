"""Deterministic numeric kernel shared by every other module.

Softmax, scaled dot-product attention, cosine similarity, entropy, top-k
selection and greedy farthest-point diversity selection. All tie-breaking
is lowest-index-wins so runs are bit-reproducible under a fixed seed.
Entropy is reported in nats.

The per-step hot kernels (logits, softmax, cosine) dispatch to the backend
chosen in :mod:`shiftprune._backend`; selection logic stays in numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class AttentionWeights:
    """A positive weight vector over an explicit list of token ids.

    `weights[i]` is the mass on the token with global id `index_map[i]`.
    Each contiguous normalization group (see `group_sizes`) sums to 1;
    plain softmax output is a single group. Treated as immutable.
    """

    weights: np.ndarray
    index_map: np.ndarray
    group_sizes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        idx = np.asarray(self.index_map, dtype=np.int64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "index_map", idx)
        if not self.group_sizes:
            object.__setattr__(self, "group_sizes", (w.size,))
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d vector")
        if idx.shape != w.shape:
            raise ValueError("index_map length must match weights")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite entries")
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive")
        if np.unique(idx).size != idx.size:
            raise ValueError("index_map entries must be unique")
        if sum(self.group_sizes) != w.size:
            raise ValueError("group_sizes must partition the weight vector")
        start = 0
        for size in self.group_sizes:
            total = float(w[start : start + size].sum())
            if abs(total - 1.0) > _SUM_TOL:
                raise ValueError(
                    f"normalization group [{start}:{start + size}] sums to {total!r}"
                )
            start += size

    @property
    def n(self) -> int:
        return int(self.weights.size)


def softmax(logits, index_map=None) -> AttentionWeights:
    """Stable softmax of a finite logit vector.

    Subtracts the max logit before exponentiation, so the result is
    invariant under adding a constant to all logits.

    Parameters
    ----------
    logits: 1-d real vector, non-empty, all finite.
    index_map: optional token ids for the entries; defaults to 0..n-1.

    Returns
    -------
    AttentionWeights summing to 1 with strictly positive entries.
    """
    x = np.ascontiguousarray(logits, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("softmax requires a non-empty 1-d vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("softmax input contains non-finite entries")
    w = kernels.softmax(x)
    if index_map is None:
        index_map = np.arange(x.size, dtype=np.int64)
    return AttentionWeights(w, index_map)


def scaled_dot_attention(query, keys, index_map=None) -> AttentionWeights:
    """Softmax of (query . key_i) / sqrt(d) over the key list, in key order.

    Parameters
    ----------
    query: vector of dimension d.
    keys: (n, d) array, one key per row.
    index_map: optional token ids in key order; defaults to 0..n-1.
    """
    q = np.ascontiguousarray(query, dtype=np.float64)
    k = np.ascontiguousarray(keys, dtype=np.float64)
    if k.ndim != 2 or q.ndim != 1:
        raise ValueError("query must be 1-d and keys 2-d")
    if k.shape[1] != q.shape[0]:
        raise ValueError(
            f"dimension mismatch: query has d={q.shape[0]}, keys have d={k.shape[1]}"
        )
    if q.shape[0] < 1:
        raise ValueError("dimension must be >= 1")
    logits = kernels.dot_logits(q, k)
    return softmax(logits, index_map=index_map)


def cosine_similarity(a, b) -> float:
    """a.b / (|a||b|); in [0, 1] when both vectors are nonnegative.

    Raises ValueError on length mismatch or a zero-norm input (softmax
    outputs can never hit the zero-norm guard).
    """
    x = np.ascontiguousarray(a, dtype=np.float64)
    y = np.ascontiguousarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("cosine_similarity requires equal-length 1-d vectors")
    if not np.any(x) or not np.any(y):
        raise ValueError("cosine_similarity is undefined for zero-norm input")
    return float(kernels.cosine(x, y))


def top_k(values, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties to the lowest index.

    Returned sorted ascending by index. Equivalent to taking the first k
    indices of a stable descending sort.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("top_k requires a 1-d vector")
    if not 1 <= k <= v.size:
        raise ValueError(f"k={k} out of range for vector of length {v.size}")
    # stable sort on -v keeps the original (lowest-index) order among ties
    order = np.argsort(-v, kind="stable")
    return np.sort(order[:k])


def shannon_entropy(w) -> float:
    """Entropy -sum(w_i ln w_i) in nats; in [0, ln n] for a distribution."""
    if isinstance(w, AttentionWeights):
        probs = w.weights
    else:
        probs = np.asarray(w, dtype=np.float64)
    return float(-(probs * np.log(probs)).sum())


def farthest_point_select(embeddings, k: int) -> np.ndarray:
    """Greedy max-min diversity selection under d(i,j) = 1 - cos(e_i, e_j).

    Seeds with the pair at maximum distance (ties to the lexicographically
    smallest index pair), then repeatedly adds the point whose minimum
    distance to the selected set is largest (ties to the lowest index).
    k=1 returns {0} by the seeding convention. This greedy rule is an
    approximation to the max-min diversity optimum, not a global solver.

    Returns indices sorted ascending.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    if e.ndim != 2:
        raise ValueError("embeddings must be a 2-d array, one vector per row")
    n = e.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} embeddings")
    norms = np.linalg.norm(e, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("farthest_point_select requires nonzero-norm embeddings")
    if k == 1:
        return np.array([0], dtype=np.int64)

    unit = e / norms[:, None]
    dist = 1.0 - unit @ unit.T

    # seed pair: max distance, lexicographically smallest (i, j) among ties
    iu = np.triu_indices(n, k=1)
    pair_pos = int(np.argmax(dist[iu]))  # argmax picks the first maximum
    a, b = int(iu[0][pair_pos]), int(iu[1][pair_pos])
    selected = [a, b]
    min_dist = np.minimum(dist[a], dist[b])

    while len(selected) < k:
        min_dist[selected] = -np.inf
        nxt = int(np.argmax(min_dist))
        selected.append(nxt)
        min_dist = np.minimum(min_dist, dist[nxt])

    return np.sort(np.array(selected, dtype=np.int64))
