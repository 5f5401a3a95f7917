"""Reproducible random streams.

Every stream is a Philox counter-based generator keyed by ``(seed, stream_id, ...)``
through :class:`numpy.random.SeedSequence`. Two calls with the same key yield
identical streams regardless of which thread or process creates them, so Monte
Carlo trials can run in any order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_stream(seed: int, *stream_id: int) -> np.random.Generator:
    """Return the generator for stream ``(seed, *stream_id)``.

    Negative seeds are folded into the unsigned 64-bit range.
    """
    key = tuple(int(s) & _MASK64 for s in stream_id)
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
