"""Pure-numpy kernel implementations (fallback backend).

These mirror the numba kernels operation-for-operation so both backends
stay numerically aligned; each backend is individually deterministic.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "numpy"


def dot_logits(query: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Scaled dot-product logits: (keys @ query) / sqrt(dim)."""
    return keys @ query / math.sqrt(query.shape[0])


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax: subtract the max, exponentiate, normalize."""
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors (norms must be nonzero)."""
    num = float(np.dot(a, b))
    return num / (math.sqrt(float(np.dot(a, a))) * math.sqrt(float(np.dot(b, b))))
