"""shiftprune: attention-shift-aware visual token pruning, simulated.

A seed-reproducible decode simulator with prefill pruning strategies,
online shift detection, context-preserving token swapping, diagnostic
analytics and a transformer FLOPs cost model.
"""

from ._backend import active_backend

__version__ = "0.1.0"

__all__ = ["active_backend", "__version__"]
