"""Deterministic random streams.

Every random draw in the package comes from a Philox counter-based
generator keyed by ``(seed, stream, index)`` through ``SeedSequence``
spawn keys, so trial ``k`` sees the same numbers regardless of how trials
are distributed over workers.
"""
from __future__ import annotations

import numpy as np

#: stream ids, one per consumer
LIFT = 0
TRIAL = 1
CHANNEL = 2


def stream(seed: int, kind: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(kind), int(index)))
    return np.random.Generator(np.random.Philox(ss))
