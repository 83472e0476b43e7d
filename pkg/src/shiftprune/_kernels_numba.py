"""Numba-jitted kernels for the per-step hot path.

Same contracts as ``_kernels_numpy``; compiled lazily on first call and
cached on disk so repeat runs skip compilation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def dot_logits(query: np.ndarray, keys: np.ndarray) -> np.ndarray:
    n, d = keys.shape
    inv = 1.0 / math.sqrt(d)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += keys[i, j] * query[j]
        out[i] = acc * inv
    return out


@njit(cache=True)
def softmax(logits: np.ndarray) -> np.ndarray:
    n = logits.shape[0]
    hi = logits[0]
    for i in range(1, n):
        if logits[i] > hi:
            hi = logits[i]
    out = np.empty(n, dtype=np.float64)
    total = 0.0
    for i in range(n):
        e = math.exp(logits[i] - hi)
        out[i] = e
        total += e
    for i in range(n):
        out[i] /= total
    return out


@njit(cache=True)
def cosine(a: np.ndarray, b: np.ndarray) -> float:
    num = 0.0
    na = 0.0
    nb = 0.0
    for i in range(a.shape[0]):
        num += a[i] * b[i]
        na += a[i] * a[i]
        nb += b[i] * b[i]
    return num / (math.sqrt(na) * math.sqrt(nb))
